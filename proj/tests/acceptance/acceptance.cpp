// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each line carries the measured quantities and runtime.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bsforce/calib.hpp"
#include "bsforce/config.hpp"
#include "bsforce/decoder.hpp"
#include "bsforce/experiments.hpp"
#include "bsforce/traceio.hpp"

using namespace bsforce;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

ChannelTrace phase_trace(const WaveformConfig& cfg, const ClockScheme& s, std::size_t group_size,
                         const std::vector<double>& phi1, const std::vector<double>& phi2,
                         const std::vector<PathTerm>& statics) {
  ChannelTrace tr;
  tr.config = cfg;
  tr.data.assign(cfg.n_subcarriers * cfg.n_snapshots, cdouble{});
  tr.sensors.push_back(SensorInfo{s, PortPhases{phi1.front(), phi2.front(), cfg.carrier_hz}});
  const double d_s = 2.0;
  for (std::size_t n = 0; n < cfg.n_snapshots; ++n) {
    const std::size_t g = std::min(n / group_size, phi1.size() - 1);
    const double t = static_cast<double>(n) * cfg.frame_period_s;
    const cdouble m = (is_on(s.clock_a, t) ? 1.0 : 0.0) * std::polar(1.0, -phi1[g]) +
                      (is_on(s.clock_b, t) ? 1.0 : 0.0) * std::polar(1.0, -phi2[g]);
    for (std::size_t k = 0; k < cfg.n_subcarriers; ++k) {
      const double fk = static_cast<double>(k) * cfg.subcarrier_spacing_hz;
      cdouble v = std::polar(1.0, -2.0 * kPi * fk * d_s / kSpeedOfLight) * m;
      for (const auto& p : statics) v += p.amplitude * std::polar(1.0, -2.0 * kPi * fk * p.distance_m / kSpeedOfLight);
      tr.at(k, n) = v;
    }
  }
  return tr;
}

// 1. Clock correctness.
Outcome clocks() {
  const auto s = preset_scheme(1000.0);
  const auto rep = verify_disjoint(s);
  const auto quarter = make_clock(1000.0, 0.25, 0.0);
  const bool support = harmonic_support(quarter, 8) == std::set<int>{1, 2, 3, 5, 6, 7};
  const bool nulls = std::abs(fourier_coefficient(quarter, 4)) == 0.0 && std::abs(fourier_coefficient(quarter, 8)) == 0.0;

  // 256-point DFT of one sampled period (midpoint samples, edges on the grid).
  // The discrete transform of a 0/1 run is a Dirichlet kernel,
  // |X_p| = |sin(p pi d)| / (256 sin(p pi / 256)); scaling by sin(x)/x with
  // x = p pi / 256 removes the sampling kernel before comparing with the series.
  double worst = 0.0, worst_raw = 0.0;
  constexpr int spp = 256;
  for (double d : {0.25, 0.5, 0.125, 0.75, 0.375}) {
    for (const auto& c : {make_clock(1000.0, d, 0.0), make_clock(2000.0, d, 0.5)}) {
      for (int p = 1; p <= 16; ++p) {
        cdouble x{};
        for (int i = 0; i < spp; ++i) {
          const double u = (i + 0.5) / spp;
          if (is_on(c, u / c.frequency)) x += std::polar(1.0, -2.0 * kPi * p * u);
        }
        x /= static_cast<double>(spp);
        const double arg = kPi * p / spp;
        const double expect = std::abs(std::sin(p * kPi * d)) / (p * kPi);
        worst = std::max(worst, std::abs(std::abs(x) * std::sin(arg) / arg - expect));
        worst_raw = std::max(worst_raw, std::abs(std::abs(x) - expect));
        worst = std::max(worst, std::abs(std::abs(fourier_coefficient(c, p)) - expect));
      }
    }
  }
  const bool pass = rep.disjoint && rep.overlap_fraction == 0.0 && support && nulls && worst <= 1e-6;
  return {pass, "overlap=" + fmt(rep.overlap_fraction) + " support_ok=" + std::to_string(support) +
                    " |a4|=|a8|=0:" + std::to_string(nulls) + " max_dev=" + fmt(worst, 3) +
                    " (uncorrected 256-pt DFT dev " + fmt(worst_raw, 3) + ")"};
}

// 2. Nyquist bound.
Outcome nyquist() {
  WaveformConfig cfg;
  const auto ok = nyquist_check(cfg, preset_scheme(1000.0));
  const auto bad = nyquist_check(cfg, preset_scheme(2500.0));
  const bool exact_t = cfg.frame_period_s == 720.0 / 12.5e6;
  const bool bound = std::abs(ok.bound_hz - 8680.6) < 0.05;
  bool rejected = false;
  try {
    (void)synthesize_clean(cfg, preset_scheme(2500.0), TouchTimeline{}, MultipathProfile{}, {}, {});
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  return {exact_t && bound && ok.ok && !bad.ok && rejected,
          "T=" + fmt(cfg.frame_period_s * 1e6) + "us bound=" + fmt(ok.bound_hz, 6) + "Hz 1kHz_ok=" +
              std::to_string(ok.ok) + " 2.5kHz_rejected=" + std::to_string(!bad.ok && rejected)};
}

// 3. Decoder exactness and multipath invariance.
Outcome exactness() {
  WaveformConfig cfg;
  cfg.n_subcarriers = 64;
  const std::size_t ng = auto_group_size(cfg, std::vector<double>{1000.0, 4000.0});
  cfg.n_snapshots = 4 * ng;
  const auto s = preset_scheme(1000.0);
  const GroupingSpec spec{ng};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_exact = 0.0, worst_mp = 0.0;
  for (double step : {1.0, -1.0, 10.0, -10.0, 90.0, -90.0}) {
    const std::vector<double> p1{0.4, 0.4 + step * kDeg, 0.4 + step * kDeg, 0.4};
    const std::vector<double> p2{-0.9, -0.9, -0.9 - step * kDeg, -0.9 - step * kDeg};
    const auto clean = group_phases(phase_trace(cfg, s, ng, p1, p2, {}), s, spec);
    for (std::size_t g = 0; g < 3; ++g) {
      worst_exact = std::max(worst_exact, std::abs(clean.dphi[0][g] - (p1[g + 1] - p1[g])));
      worst_exact = std::max(worst_exact, std::abs(clean.dphi[1][g] - (p2[g + 1] - p2[g])));
    }
    std::vector<PathTerm> statics;
    for (int i = 0; i < 10; ++i) statics.push_back(PathTerm{std::polar(100.0 * u(rng), 2 * kPi * u(rng)), 0.1 + 20.0 * u(rng)});
    const auto mp = group_phases(phase_trace(cfg, s, ng, p1, p2, statics), s, spec);
    for (std::size_t port = 0; port < 2; ++port)
      for (std::size_t g = 0; g < 3; ++g)
        worst_mp = std::max(worst_mp, std::abs(mp.dphi[port][g] - clean.dphi[port][g]));
  }
  return {worst_exact <= 1e-9 && worst_mp < 1e-6,
          "max_step_err=" + fmt(worst_exact, 3) + "rad multipath_change=" + fmt(worst_mp, 3) + "rad (N_g=" +
              std::to_string(ng) + ")"};
}

// 4. Averaging gain.
Outcome averaging() {
  const auto s = preset_scheme(1000.0);
  const std::vector<PathTerm> statics{{{100.0, 0.0}, 0.3}};
  const PathTerm sensor{{1.0, 0.0}, 2.0};
  constexpr std::size_t trials = 200;
  const double snr = 10.0;

  std::ostringstream os;
  bool pass = true;
  WaveformConfig wf;
  double base_k = 0.0;
  for (std::size_t K : {1u, 16u, 64u}) {
    wf.n_subcarriers = K;
    const auto st = phase_error_stats(wf, s, statics, sensor, snr, 625, trials, derive_seed(41, K, 0));
    if (K == 1) base_k = st.pooled_deg;
    const double ratio = st.pooled_deg / base_k * std::sqrt(static_cast<double>(K));
    pass = pass && std::abs(ratio - 1.0) <= 0.2;
    os << "K=" << K << ":" << fmt(st.pooled_deg) << "deg(x" << fmt(ratio, 3) << ") ";
  }
  wf.n_subcarriers = 16;
  double base_n = 0.0;
  for (std::size_t ng : {625u, 1250u, 3125u}) {
    const auto st = phase_error_stats(wf, s, statics, sensor, snr, ng, trials, derive_seed(43, ng, 0));
    if (ng == 625) base_n = st.pooled_deg;
    const double ratio = st.pooled_deg / base_n * std::sqrt(static_cast<double>(ng) / 625.0);
    pass = pass && std::abs(ratio - 1.0) <= 0.2;
    os << "Ng=" << ng << ":" << fmt(st.pooled_deg) << "deg(x" << fmt(ratio, 3) << ") ";
  }

  // Threshold for 0.5 deg on the preset (K = 64, N_g = 625).
  auto cfg = default_config();
  cfg.sweep.trials = trials;
  cfg.sweep.snr_start_db = -10.0;
  cfg.sweep.snr_stop_db = 30.0;
  cfg.sweep.snr_step_db = 1.0;
  const auto rows = run_snr_sweep(cfg, 4242);
  const auto th = snr_threshold(rows, 0.5);
  os << "std<=0.5deg from " << (th ? fmt(*th) + "dB" : std::string("none")) << " (reported)";
  return {pass, os.str()};
}

// 5. Transduction shape.
Outcome transduction() {
  const SensorGeometry g;
  const MechanicalParams m;
  const double fc = 2.4e9;
  const auto nt = no_touch_phases(g, fc);
  double worst_sym = 0.0;
  bool asym = true;
  for (int i = 0; i <= 750; ++i) {
    const double F = m.contact_threshold_n + (8.0 - m.contact_threshold_n) * i / 750.0;
    const auto mid = port_phases(shorting_segment(Touch{F, g.length_mm / 2}, m, g), g, fc);
    worst_sym = std::max(worst_sym, std::abs((mid.phi1 - nt.phi1) - (mid.phi2 - nt.phi2)));
    const auto off = port_phases(shorting_segment(Touch{F, 20.0}, m, g), g, fc);
    if (std::abs(off.phi1 - nt.phi1) < std::abs(off.phi2 - nt.phi2)) asym = false;
  }
  return {worst_sym <= 1e-12 && asym,
          "midpoint |dphi1-dphi2|max=" + fmt(worst_sym, 3) + "rad 20mm |dphi1|>=|dphi2|:" + std::to_string(asym)};
}

std::vector<double> force_grid() {
  std::vector<double> f;
  for (int i = 0; i <= 14; ++i) f.push_back(1.0 + 0.5 * i);
  return f;
}

// 6. Closed-loop accuracy.
Outcome closed_loop() {
  auto cfg = default_config();
  cfg.calibration.locations_mm = {20, 30, 40, 50, 60};
  cfg.calibration.forces_n = force_grid();
  cfg.sweep.trials = 500;
  cfg.sweep.test_locations_mm = {20, 40, 55, 60};
  cfg.sweep.force_min_n = 1.0;
  cfg.sweep.force_max_n = 8.0;
  cfg.noise.snr_db = 25.0;
  cfg.waveform.carrier_hz = 2.4e9;
  const auto model = calibrate(cfg);
  const auto res = run_force_sweep(cfg, model, 606);
  std::size_t flagged = 0;
  for (const auto& t : res.trials) flagged += t.estimate.in_range ? 0 : 1;
  return {res.trials.size() >= 500 && res.median_force_err_n <= 0.3 && res.median_location_err_mm <= 0.6,
          "trials=" + std::to_string(res.trials.size()) + " median|dF|=" + fmt(res.median_force_err_n) +
              "N median|dl|=" + fmt(res.median_location_err_mm) + "mm flagged=" + std::to_string(flagged)};
}

// 7. Intermediate-location model check.
Outcome intermediate() {
  const SensorGeometry g;
  const MechanicalParams m;
  const double fc = 2.4e9;
  const auto model = fit_model(generate_sweep({20, 30, 40, 50, 60}, force_grid(), g, m, fc));
  const auto nt = no_touch_phases(g, fc);
  double ss1 = 0.0, ss2 = 0.0;
  int n = 0;
  for (int i = 0; i <= 140; ++i, ++n) {
    const double F = 1.0 + 7.0 * i / 140.0;
    const auto truth = port_phases(shorting_segment(Touch{F, 55.0}, m, g), g, fc);
    const auto pred = model_forward(model, F, 55.0);
    const double e1 = wrap_angle(pred.phi1 - (truth.phi1 - nt.phi1));
    const double e2 = wrap_angle(pred.phi2 - (truth.phi2 - nt.phi2));
    ss1 += e1 * e1;
    ss2 += e2 * e2;
  }
  const double rms = std::sqrt((ss1 + ss2) / (2.0 * n)) / kDeg;
  return {rms <= 2.0, "rms=" + fmt(rms) + "deg (port1 " + fmt(std::sqrt(ss1 / n) / kDeg) + ", port2 " +
                          fmt(std::sqrt(ss2 / n) / kDeg) + ")"};
}

// 8. Multi-sensor isolation.
Outcome isolation() {
  auto cfg = default_config();
  SensorSetup second = cfg.primary();
  second.scheme = preset_scheme(1400.0);
  second.path = PathTerm{{0.8, 0.4}, 3.1};
  cfg.sensors.push_back(second);
  cfg.noise.snr_db = 30.0;
  cfg.sweep.trials = 24;
  const auto res = run_crosstalk(cfg, 808);

  // Absolute decoding error of each sensor against the transducer model, on
  // top of the difference measure run_crosstalk reports.
  const std::size_t ng = res.group_size;
  WaveformConfig wf = cfg.waveform;
  wf.n_snapshots = 3 * ng;
  auto sensors = cfg.sensors;
  const Touch t1{3.0, 40.0}, t2{5.0, 30.0};
  sensors[0].timeline = TouchTimeline({{0, std::nullopt}, {ng, t1}});
  sensors[1].timeline = TouchTimeline({{0, std::nullopt}, {2 * ng, t2}});
  NoiseSpec quiet = cfg.noise;
  quiet.snr_db.reset();
  const auto tr = synthesize_scene(wf, sensors, cfg.static_paths, quiet);
  const auto a = group_phases(tr, sensors[0].scheme, GroupingSpec{ng});
  const auto b = group_phases(tr, sensors[1].scheme, GroupingSpec{ng});
  const auto nt = no_touch_phases(sensors[0].geom, wf.carrier_hz);
  const auto p1 = port_phases(shorting_segment(t1, sensors[0].mech, sensors[0].geom), sensors[0].geom, wf.carrier_hz);
  const auto p2 = port_phases(shorting_segment(t2, sensors[1].mech, sensors[1].geom), sensors[1].geom, wf.carrier_hz);
  double worst = 0.0;
  worst = std::max({worst, std::abs(wrap_angle(a.dphi[0][0] - (p1.phi1 - nt.phi1))), std::abs(a.dphi[0][1]),
                    std::abs(wrap_angle(a.dphi[1][0] - (p1.phi2 - nt.phi2))), std::abs(a.dphi[1][1]),
                    std::abs(b.dphi[0][0]), std::abs(wrap_angle(b.dphi[0][1] - (p2.phi1 - nt.phi1))),
                    std::abs(b.dphi[1][0]), std::abs(wrap_angle(b.dphi[1][1] - (p2.phi2 - nt.phi2)))});
  return {res.max_deg < 0.1 && worst / kDeg < 0.1,
          "N_g=" + std::to_string(ng) + " max_crosstalk=" + fmt(res.max_deg, 3) + "deg over " +
              std::to_string(res.trials.size()) + " trials at 30dB, noiseless two-sensor error=" +
              fmt(worst / kDeg, 3) + "deg"};
}

// 9. Impedance formula.
Outcome impedance_check() {
  const double z = impedance(0.2, 1.0);
  const double r = solve_width_ratio(50.0);
  double worst = 0.0;
  for (double zt = 5.0; zt <= 150.0; zt += 2.5) worst = std::max(worst, std::abs(impedance(1.0, solve_width_ratio(zt)) - zt));
  worst = std::max(worst, std::abs(impedance(1.0, r) - 50.0));
  return {std::abs(z - 49.4) < 0.05 && r >= 4.8 && r <= 5.0 && worst <= 1e-6,
          "Z(h/w=0.2)=" + fmt(z) + "ohm w/h(50ohm)=" + fmt(r) + " round_trip_max=" + fmt(worst, 3) + "ohm"};
}

// 10. SNR sweep shape.
Outcome snr_sweep() {
  auto cfg = default_config();
  cfg.sweep.trials = 200;
  const auto rows = run_snr_sweep(cfg, 1010);
  std::vector<double> snr, sd;
  for (const auto& r : rows) {
    snr.push_back(r.snr_db);
    sd.push_back(r.stats.pooled_deg);
  }
  const double rho = spearman(snr, sd);
  const auto th = snr_threshold(rows, 5.0);
  return {rho <= -0.95 && th.has_value(),
          "points=" + std::to_string(rows.size()) + " spearman=" + fmt(rho) + " std<=5deg for SNR>=" +
              (th ? fmt(*th) + "dB" : std::string("none")) + " (std " + fmt(sd.front()) + "deg at " +
              fmt(snr.front()) + "dB, " + fmt(sd.back(), 3) + "deg at " + fmt(snr.back()) + "dB)"};
}

// 11. File-format round trip.
Outcome file_round_trip() {
  const auto dir = std::filesystem::temp_directory_path() / "bsforce_acceptance";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(1111);
  std::uniform_int_distribution<std::uint32_t> bits;
  std::uniform_int_distribution<int> pick(0, 5), kdist(1, 16), ndist(1, 200);
  auto draw = [&]() -> float {
    switch (pick(rng)) {
      case 0: return 0.0f;
      case 1: return -0.0f;
      case 2: return std::bit_cast<float>(bits(rng) & 0x807fffffu);  // subnormal (or signed zero)
      default: {
        std::uint32_t b;
        do b = bits(rng); while (((b >> 23) & 0xffu) == 0xffu);
        return std::bit_cast<float>(b);
      }
    }
  };
  std::size_t mismatches = 0, subnormals = 0, neg_zero = 0;
  for (int t = 0; t < 100; ++t) {
    ChannelTrace tr;
    tr.config.n_subcarriers = static_cast<std::size_t>(kdist(rng));
    tr.config.n_snapshots = static_cast<std::size_t>(ndist(rng));
    tr.sensors.push_back(SensorInfo{preset_scheme(1000.0), no_touch_phases({}, tr.config.carrier_hz)});
    tr.provenance.seed = rng();
    tr.provenance.config_digest = rng();
    std::vector<float> raw(2 * tr.config.n_subcarriers * tr.config.n_snapshots);
    for (auto& f : raw) {
      f = draw();
      subnormals += std::fpclassify(f) == FP_SUBNORMAL;
      neg_zero += f == 0.0f && std::signbit(f);
    }
    tr.data.resize(raw.size() / 2);
    for (std::size_t i = 0; i < tr.data.size(); ++i) tr.data[i] = cdouble(raw[2 * i], raw[2 * i + 1]);
    const auto path = dir / ("trace_" + std::to_string(t) + ".wft");
    write_trace(tr, path);
    const auto back = read_trace(path);
    if (back.data.size() != tr.data.size() || back.provenance.seed != tr.provenance.seed ||
        back.provenance.config_digest != tr.provenance.config_digest) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < tr.data.size(); ++i) {
      const auto re = std::bit_cast<std::uint32_t>(static_cast<float>(back.data[i].real()));
      const auto im = std::bit_cast<std::uint32_t>(static_cast<float>(back.data[i].imag()));
      if (re != std::bit_cast<std::uint32_t>(raw[2 * i]) || im != std::bit_cast<std::uint32_t>(raw[2 * i + 1])) ++mismatches;
    }
    std::filesystem::remove(path);
  }
  return {mismatches == 0 && subnormals > 0 && neg_zero > 0,
          "100 traces, mismatched values=" + std::to_string(mismatches) + " subnormals=" +
              std::to_string(subnormals) + " negative_zeros=" + std::to_string(neg_zero)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "clock correctness", 1.0, clocks},
      {2, "Nyquist bound", 1.0, nyquist},
      {3, "decoder exactness", 10.0, exactness},
      {4, "averaging gain", 120.0, averaging},
      {5, "transduction shape", 1.0, transduction},
      {6, "closed-loop accuracy", 300.0, closed_loop},
      {7, "intermediate-location model", 10.0, intermediate},
      {8, "multi-sensor isolation", 60.0, isolation},
      {9, "impedance formula", 1.0, impedance_check},
      {10, "SNR sweep shape", 120.0, snr_sweep},
      {11, "file-format round trip", 10.0, file_round_trip},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << " [" << fmt(secs, 3) << "s / budget " << c.budget_s << "s" << (in_time ? "" : ", over budget")
              << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << '\n';
  return failures == 0 ? 0 : 1;
}
