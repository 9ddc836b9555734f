#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "bsforce/calib.hpp"
#include "bsforce/config.hpp"
#include "bsforce/decoder.hpp"
#include "bsforce/experiments.hpp"
#include "bsforce/traceio.hpp"

namespace py = pybind11;
using namespace bsforce;

namespace {

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

py::array_t<cdouble> trace_array(const ChannelTrace& t) {
  py::array_t<cdouble> out({t.n_snapshots(), t.n_subcarriers()});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

ChannelTrace trace_from_array(py::array_t<cdouble, py::array::c_style | py::array::forcecast> data,
                              const std::vector<double>& sensor_fs, double frame_period_s,
                              double subcarrier_spacing_hz, double carrier_hz) {
  if (data.ndim() != 2) throw std::invalid_argument("data must have shape (n_snapshots, n_subcarriers)");
  ChannelTrace t;
  t.config.n_snapshots = static_cast<std::size_t>(data.shape(0));
  t.config.n_subcarriers = static_cast<std::size_t>(data.shape(1));
  t.config.frame_period_s = frame_period_s;
  t.config.subcarrier_spacing_hz = subcarrier_spacing_hz;
  t.config.carrier_hz = carrier_hz;
  t.data.assign(data.data(), data.data() + data.size());
  for (double fs : sensor_fs) t.sensors.push_back(SensorInfo{preset_scheme(fs), no_touch_phases({}, carrier_hz)});
  t.validate();
  return t;
}

py::dict decode(const ChannelTrace& trace, std::optional<std::size_t> group_size, std::size_t sensor, bool demix) {
  if (sensor >= trace.sensors.size()) throw std::out_of_range("sensor index beyond the sensors in the trace");
  const auto freqs = trace_read_frequencies(trace);
  const std::size_t ng =
      group_size ? make_grouping(trace.config, freqs, *group_size).group_size : auto_group_size(trace.config, freqs);
  const auto& info = trace.sensors[sensor];
  DecodeOptions opts;
  opts.demix = demix;
  PhaseSeries series;
  std::array<std::vector<SnrReport>, 2> snr;
  {
    py::gil_scoped_release release;
    series = anchor(group_phases(trace, info.scheme, GroupingSpec{ng}, opts), info.no_touch);
    snr = group_snr(trace, info.scheme, GroupingSpec{ng});
  }
  const std::size_t G = series.n_groups;
  py::array_t<double> dphi({std::size_t{2}, G - 1}), cum({std::size_t{2}, G}), snr_db({std::size_t{2}, G});
  py::array_t<bool> ambiguous(G - 1);
  auto d = dphi.mutable_unchecked<2>();
  auto c = cum.mutable_unchecked<2>();
  auto s = snr_db.mutable_unchecked<2>();
  auto a = ambiguous.mutable_unchecked<1>();
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t g = 0; g + 1 < G; ++g) d(p, g) = series.dphi[p][g];
    for (std::size_t g = 0; g < G; ++g) {
      c(p, g) = series.cumulative[p][g];
      s(p, g) = snr[p][g].snapshot_snr_db;
    }
  }
  for (std::size_t g = 0; g + 1 < G; ++g) a(g) = series.ambiguous_step[g];
  py::dict out;
  out["group_size"] = ng;
  out["group_duration_s"] = series.group_duration_s;
  out["dphi"] = dphi;
  out["cumulative"] = cum;
  out["snr_db"] = snr_db;
  out["ambiguous"] = ambiguous;
  return out;
}

}  // namespace

PYBIND11_MODULE(_bsforce, m) {
  m.doc() = "Backscatter force sensing simulator and decoder (compiled core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_IOError);

  py::class_<SwitchClock>(m, "SwitchClock")
      .def_readonly("frequency", &SwitchClock::frequency)
      .def_readonly("duty", &SwitchClock::duty)
      .def_readonly("phase_offset", &SwitchClock::phase_offset)
      .def("__repr__", [](const SwitchClock& c) {
        return "SwitchClock(frequency=" + format_number(c.frequency) + ", duty=" + format_number(c.duty) +
               ", phase_offset=" + format_number(c.phase_offset) + ")";
      });
  py::class_<ClockScheme>(m, "ClockScheme")
      .def_readonly("clock_a", &ClockScheme::clock_a)
      .def_readonly("clock_b", &ClockScheme::clock_b)
      .def_property_readonly("read_frequencies",
                             [](const ClockScheme& s) { return py::make_tuple(s.read_freq_port1(), s.read_freq_port2()); });

  m.def("make_clock", &make_clock, py::arg("frequency"), py::arg("duty"), py::arg("phase_offset") = 0.0);
  m.def("preset_scheme", &preset_scheme, py::arg("fs"));
  m.def("make_scheme", &make_scheme, py::arg("clock_a"), py::arg("clock_b"));
  m.def("is_on", &is_on, py::arg("clock"), py::arg("t"));
  m.def("fourier_coefficient", &fourier_coefficient, py::arg("clock"), py::arg("p"));
  m.def("harmonic_support", &harmonic_support, py::arg("clock"), py::arg("n_max"));
  m.def("verify_disjoint", [](const ClockScheme& s) {
    const auto r = verify_disjoint(s);
    return py::make_tuple(r.disjoint, r.overlap_fraction);
  });

  py::class_<SensorGeometry>(m, "SensorGeometry")
      .def(py::init<>())
      .def_readwrite("length_mm", &SensorGeometry::length_mm)
      .def_readwrite("signal_width_mm", &SensorGeometry::signal_width_mm)
      .def_readwrite("ground_width_mm", &SensorGeometry::ground_width_mm)
      .def_readwrite("height_mm", &SensorGeometry::height_mm)
      .def_readwrite("eps_eff", &SensorGeometry::eps_eff);
  py::class_<MechanicalParams>(m, "MechanicalParams")
      .def(py::init<>())
      .def_readwrite("contact_threshold_n", &MechanicalParams::contact_threshold_n)
      .def_readwrite("force_scale_n", &MechanicalParams::force_scale_n)
      .def_readwrite("max_halfwidth_mm", &MechanicalParams::max_halfwidth_mm)
      .def_readwrite("asymmetry_exponent", &MechanicalParams::asymmetry_exponent);

  m.def("impedance", &impedance, py::arg("height"), py::arg("width"));
  m.def("solve_width_ratio", &solve_width_ratio, py::arg("z_target"));
  m.def("phase_per_mm", &phase_per_mm, py::arg("carrier_hz"), py::arg("eps_eff") = 1.0);
  m.def("wrap_angle", &wrap_angle, py::arg("rad"));
  m.def(
      "shorting_segment",
      [](std::optional<double> force, double location, const SensorGeometry& g,
         const MechanicalParams& mech) -> std::optional<std::pair<double, double>> {
        const TouchEvent touch = force ? TouchEvent(Touch{*force, location}) : std::nullopt;
        const auto seg = shorting_segment(touch, mech, g);
        if (!seg) return std::nullopt;
        return std::make_pair(seg->a_mm, seg->b_mm);
      },
      py::arg("force_n"), py::arg("location_mm") = 0.0, py::arg("geometry") = SensorGeometry{},
      py::arg("mechanics") = MechanicalParams{});
  m.def(
      "port_phases",
      [](std::optional<double> force, double location, double carrier_hz, const SensorGeometry& g,
         const MechanicalParams& mech) {
        const TouchEvent touch = force ? TouchEvent(Touch{*force, location}) : std::nullopt;
        const auto ph = port_phases(shorting_segment(touch, mech, g), g, carrier_hz);
        return py::make_tuple(ph.phi1, ph.phi2);
      },
      py::arg("force_n"), py::arg("location_mm") = 0.0, py::arg("carrier_hz") = 2.4e9,
      py::arg("geometry") = SensorGeometry{}, py::arg("mechanics") = MechanicalParams{},
      "Unwrapped round-trip port phases in radians; force_n=None is the untouched sensor.");

  m.def("nyquist_bound", [](double frame_period_s) { return 0.5 / frame_period_s; }, py::arg("frame_period_s"));
  m.def("aliased_frequency", &aliased_frequency, py::arg("f_hz"), py::arg("period_s"));

  py::class_<ChannelTrace>(m, "Trace")
      .def_property_readonly("n_subcarriers", &ChannelTrace::n_subcarriers)
      .def_property_readonly("n_snapshots", &ChannelTrace::n_snapshots)
      .def_property_readonly("frame_period_s", [](const ChannelTrace& t) { return t.config.frame_period_s; })
      .def_property_readonly("subcarrier_spacing_hz", [](const ChannelTrace& t) { return t.config.subcarrier_spacing_hz; })
      .def_property_readonly("carrier_hz", [](const ChannelTrace& t) { return t.config.carrier_hz; })
      .def_property_readonly("seed", [](const ChannelTrace& t) { return t.provenance.seed; })
      .def_property_readonly("schemes",
                             [](const ChannelTrace& t) {
                               std::vector<ClockScheme> out;
                               for (const auto& s : t.sensors) out.push_back(s.scheme);
                               return out;
                             })
      .def_property_readonly("read_frequencies", &trace_read_frequencies)
      .def_property_readonly("data", &trace_array, "Copy of H as a complex (n_snapshots, n_subcarriers) array.")
      .def("header_json", &trace_header_json);

  m.def(
      "simulate",
      [](const std::string& config_json, std::optional<std::uint64_t> seed) {
        auto cfg = parse_config(config_json);
        if (seed) cfg.noise.seed = *seed;
        py::gil_scoped_release release;
        return synthesize_scene(cfg.waveform, cfg.sensors, cfg.static_paths, cfg.noise);
      },
      py::arg("config_json") = std::string(), py::arg("seed") = py::none());
  m.def("trace_from_array", &trace_from_array, py::arg("data"), py::arg("sensor_fs") = std::vector<double>{1000.0},
        py::arg("frame_period_s") = WaveformConfig{}.frame_period_s,
        py::arg("subcarrier_spacing_hz") = WaveformConfig{}.subcarrier_spacing_hz,
        py::arg("carrier_hz") = WaveformConfig{}.carrier_hz);
  m.def("write_trace", &write_trace, py::arg("trace"), py::arg("path"));
  m.def("read_trace", &read_trace, py::arg("path"));
  m.def("decode", &decode, py::arg("trace"), py::arg("group_size") = py::none(), py::arg("sensor") = 0,
        py::arg("demix") = true);

  py::class_<SensorModel>(m, "SensorModel")
      .def_property_readonly("locations_mm",
                             [](const SensorModel& sm) {
                               std::vector<double> out;
                               for (const auto& f : sm.fits) out.push_back(f.location_mm);
                               return out;
                             })
      .def_property_readonly("rms_deg",
                             [](const SensorModel& sm) {
                               std::vector<double> out;
                               for (const auto& f : sm.fits) out.push_back(f.rms_deg);
                               return out;
                             })
      .def_property_readonly("force_range_n", [](const SensorModel& sm) { return py::make_tuple(sm.force_min_n, sm.force_max_n); })
      .def_property_readonly("no_touch_rad", [](const SensorModel& sm) { return py::make_tuple(sm.no_touch.phi1, sm.no_touch.phi2); })
      .def("to_json", [](const SensorModel& sm) { return model_to_json(sm).dump(); });

  m.def(
      "calibrate",
      [](const std::string& config_json, std::optional<std::vector<double>> locations,
         std::optional<std::vector<double>> forces) {
        auto cfg = parse_config(config_json);
        if (locations) cfg.calibration.locations_mm = *locations;
        if (forces) cfg.calibration.forces_n = *forces;
        return calibrate(cfg);
      },
      py::arg("config_json") = std::string(), py::arg("locations_mm") = py::none(), py::arg("forces_n") = py::none());
  m.def(
      "model_forward",
      [](const SensorModel& sm, double force, double location) {
        const auto p = model_forward(sm, force, location);
        return py::make_tuple(p.phi1, p.phi2, p.in_range);
      },
      py::arg("model"), py::arg("force_n"), py::arg("location_mm"));
  m.def(
      "invert",
      [](const SensorModel& sm, double phi1, double phi2) {
        const auto e = invert(sm, phi1, phi2);
        py::dict d;
        d["force_n"] = e.force_n;
        d["location_mm"] = e.location_mm;
        d["residual"] = e.residual;
        d["in_range"] = e.in_range;
        return d;
      },
      py::arg("model"), py::arg("phi1"), py::arg("phi2"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  m.def("default_config_json", [] { return config_to_json(default_config()).dump(2); });
  m.def(
      "snr_sweep",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto cfg = parse_config(config_json);
        std::vector<SnrSweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_snr_sweep(cfg, seed);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["snr_db"] = r.snr_db;
          d["phase_std1_deg"] = r.stats.std1_deg;
          d["phase_std2_deg"] = r.stats.std2_deg;
          d["phase_std_deg"] = r.stats.pooled_deg;
          out.append(d);
        }
        return out;
      },
      py::arg("config_json") = std::string(), py::arg("seed") = 7);
  m.def(
      "force_sweep",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto cfg = parse_config(config_json);
        ForceSweepResult res;
        {
          py::gil_scoped_release release;
          res = run_force_sweep(cfg, calibrate(cfg), seed);
        }
        py::dict d;
        d["median_force_err_n"] = res.median_force_err_n;
        d["median_location_err_mm"] = res.median_location_err_mm;
        d["trials"] = res.trials.size();
        return d;
      },
      py::arg("config_json") = std::string(), py::arg("seed") = 7);
  m.def(
      "crosstalk",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto cfg = parse_config(config_json);
        CrosstalkResult res;
        {
          py::gil_scoped_release release;
          res = run_crosstalk(cfg, seed);
        }
        py::dict d;
        d["group_size"] = res.group_size;
        d["max_deg"] = res.max_deg;
        d["median_deg"] = res.median_deg;
        return d;
      },
      py::arg("config_json") = std::string(), py::arg("seed") = 7);
}
