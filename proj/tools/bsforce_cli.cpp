// bsforce: simulate, decode, calibrate and sweep backscatter force-sensor
// experiments.
//
// Exit codes: 0 success, 2 configuration or validation error, 1 runtime error.
// Diagnostics go to stderr; stdout carries data only.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "bsforce/calib.hpp"
#include "bsforce/config.hpp"
#include "bsforce/decoder.hpp"
#include "bsforce/experiments.hpp"
#include "bsforce/traceio.hpp"

using namespace bsforce;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("WIFORCE_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("WIFORCE_SEED is not an unsigned integer: ") + env);
    }
  }
  return config_seed;
}

// "-" writes to stdout.
template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct SimulateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  auto cfg = load_config(a.config);
  cfg.noise.seed = resolve_seed(a.seed, cfg.noise.seed);
  const auto trace = synthesize_scene(cfg.waveform, cfg.sensors, cfg.static_paths, cfg.noise);
  write_trace(trace, a.out);
  std::cerr << "wrote " << a.out << ": K=" << trace.n_subcarriers() << " N=" << trace.n_snapshots()
            << " T=" << trace.config.frame_period_s << " s, seed " << trace.provenance.seed << '\n';
  return 0;
}

struct DecodeArgs {
  std::string trace, out = "-", group_size = "auto", model;
  std::size_t sensor = 0;
};

int cmd_decode(const DecodeArgs& a) {
  const auto trace = read_trace(a.trace);
  if (a.sensor >= trace.sensors.size()) throw ConfigError("--sensor index beyond the sensors in the trace");
  const auto freqs = trace_read_frequencies(trace);
  std::size_t ng = 0;
  try {
    if (a.group_size == "auto") {
      ng = auto_group_size(trace.config, freqs);
    } else {
      std::size_t pos = 0;
      const auto v = std::stoull(a.group_size, &pos);
      if (pos != a.group_size.size()) throw std::invalid_argument("bad number");
      ng = make_grouping(trace.config, freqs, v).group_size;
    }
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("--group-size: ") + e.what());
  }
  const GroupingSpec spec{ng};
  const auto& info = trace.sensors[a.sensor];
  const auto series = anchor(group_phases(trace, info.scheme, spec), info.no_touch);
  const auto snr = group_snr(trace, info.scheme, spec);

  std::optional<std::vector<Estimate>> estimates;
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    estimates.emplace();
    for (std::size_t g = 0; g < series.n_groups; ++g)
      estimates->push_back(invert(model, series.cumulative[0][g], series.cumulative[1][g]));
  }
  std::size_t flagged = 0;
  for (bool f : series.ambiguous_step) flagged += f ? 1 : 0;
  if (flagged)
    std::cerr << "note: " << flagged << " group step(s) exceed the slew limit; cumulative phase is exact only modulo 2pi\n";
  std::cerr << "decoded " << series.n_groups << " groups of " << ng << " snapshots\n";
  with_output(a.out, [&](std::ostream& os) { write_phase_csv(os, series, snr, estimates ? &*estimates : nullptr); });
  return 0;
}

struct CalibrateArgs {
  std::string config, out, dataset_out;
  std::vector<double> locations, forces;
};

int cmd_calibrate(const CalibrateArgs& a) {
  auto cfg = load_config(a.config);
  if (!a.locations.empty()) cfg.calibration.locations_mm = a.locations;
  if (!a.forces.empty()) cfg.calibration.forces_n = a.forces;
  const auto& p = cfg.primary();
  CalibrationDataset data;
  try {
    data = generate_sweep(cfg.calibration.locations_mm, cfg.calibration.forces_n, p.geom, p.mech,
                          cfg.waveform.carrier_hz);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto model = fit_model(data);
  if (!a.dataset_out.empty()) save_dataset(data, a.dataset_out);
  save_model(model, a.out);
  for (const auto& f : model.fits)
    std::cerr << "location " << f.location_mm << " mm: fit rms " << f.rms_deg << " deg\n";
  return 0;
}

struct SweepArgs {
  std::string config, mode, out = "-", model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
};

int cmd_sweep(const SweepArgs& a) {
  auto cfg = load_config(a.config);
  if (a.trials) {
    if (*a.trials == 0) throw ConfigError("--trials must be positive");
    cfg.sweep.trials = *a.trials;
  }
  const auto seed = resolve_seed(a.seed, cfg.noise.seed);
  if (a.mode == "snr") {
    const auto rows = run_snr_sweep(cfg, seed);
    with_output(a.out, [&](std::ostream& os) { write_snr_sweep_csv(os, rows); });
    if (auto th = snr_threshold(rows, 5.0)) std::cerr << "phase std <= 5 deg from " << *th << " dB\n";
    if (auto th = snr_threshold(rows, 0.5)) std::cerr << "phase std <= 0.5 deg from " << *th << " dB\n";
  } else if (a.mode == "force") {
    const auto model = a.model.empty() ? calibrate(cfg) : load_model(a.model);
    const auto res = run_force_sweep(cfg, model, seed);
    with_output(a.out, [&](std::ostream& os) { write_force_sweep_csv(os, res); });
    std::cerr << "median force error " << res.median_force_err_n << " N, median location error "
              << res.median_location_err_mm << " mm over " << res.trials.size() << " trials\n";
  } else if (a.mode == "crosstalk") {
    const auto res = run_crosstalk(cfg, seed);
    with_output(a.out, [&](std::ostream& os) { write_crosstalk_csv(os, res); });
    std::cerr << "max cross-talk " << res.max_deg << " deg (group size " << res.group_size << ")\n";
  } else {
    throw ConfigError("--mode must be force, snr or crosstalk");
  }
  return 0;
}

struct ImpedanceArgs {
  std::optional<double> height, width, solve_z;
};

int cmd_impedance(const ImpedanceArgs& a) {
  json out;
  try {
    if (a.solve_z) {
      if (a.height || a.width) throw ConfigError("--solve-z excludes --height/--width");
      const double ratio = solve_width_ratio(*a.solve_z);
      out = json{{"z_target_ohm", *a.solve_z}, {"width_to_height", ratio}, {"height_to_width", 1.0 / ratio}};
    } else {
      if (!a.height || !a.width) throw ConfigError("give --height and --width, or --solve-z");
      out = json{{"height_mm", *a.height}, {"width_mm", *a.width}, {"impedance_ohm", impedance(*a.height, *a.width)}};
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  std::cout << out.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backscatter force sensing simulator and decoder"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Synthesize a channel trace from a config");
  s->add_option("--config", sim.config, "Experiment config (JSON)")->required();
  s->add_option("--out", sim.out, "Output trace file")->required();
  s->add_option("--seed", sim.seed, "Noise seed (overrides WIFORCE_SEED and the config)");

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "Decode per-group phases from a trace");
  d->add_option("--trace", dec.trace, "Input trace file")->required();
  d->add_option("--group-size", dec.group_size, "Snapshots per phase group, or auto");
  d->add_option("--model", dec.model, "Sensor model (JSON); appends force/location estimates");
  d->add_option("--sensor", dec.sensor, "Sensor index inside the trace");
  d->add_option("--out", dec.out, "Output CSV, - for stdout");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit a sensor model from a simulated sweep");
  c->add_option("--config", cal.config, "Experiment config (JSON)")->required();
  c->add_option("--locations", cal.locations, "Calibration locations in mm")->delimiter(',');
  c->add_option("--forces", cal.forces, "Calibration forces in N")->delimiter(',');
  c->add_option("--out", cal.out, "Output model file")->required();
  c->add_option("--dataset-out", cal.dataset_out, "Also write the calibration dataset (JSON)");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Monte-Carlo sweeps");
  w->add_option("--config", sw.config, "Experiment config (JSON)")->required();
  w->add_option("--mode", sw.mode, "force, snr or crosstalk")->required();
  w->add_option("--out", sw.out, "Output CSV, - for stdout");
  w->add_option("--model", sw.model, "Sensor model for force mode (default: calibrate from config)");
  w->add_option("--seed", sw.seed, "Base seed");
  w->add_option("--trials", sw.trials, "Trials per sweep point");

  ImpedanceArgs imp;
  auto* z = app.add_subcommand("impedance", "Microstrip impedance or width ratio");
  z->add_option("--height", imp.height, "Substrate height in mm");
  z->add_option("--width", imp.width, "Trace width in mm");
  z->add_option("--solve-z", imp.solve_z, "Target impedance in ohms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*d) return cmd_decode(dec);
    if (*c) return cmd_calibrate(cal);
    if (*w) return cmd_sweep(sw);
    if (*z) return cmd_impedance(imp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
