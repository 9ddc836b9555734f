#include "bsforce/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "bsforce/decoder.hpp"
#include "bsforce/traceio.hpp"

namespace bsforce {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

// Runs f(i) for i in [0, n) on a small thread pool; f writes to its own slot.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  unsigned w = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  w = static_cast<unsigned>(std::min<std::size_t>(w, n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          f(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
    i = j + 1;
  }
  return r;
}

SensorSetup default_second_sensor(const SensorSetup& primary) {
  SensorSetup s = primary;
  s.scheme = preset_scheme(1400.0);
  s.path = PathTerm{primary.path.amplitude, primary.path.distance_m + 1.0};
  s.timeline = TouchTimeline{};
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

PhaseErrorStats phase_error_stats(const WaveformConfig& waveform, const ClockScheme& scheme,
                                  const std::vector<PathTerm>& static_paths, const PathTerm& sensor_path,
                                  std::optional<double> snr_db, std::size_t group_size, std::size_t trials,
                                  std::uint64_t seed, unsigned workers) {
  WaveformConfig wf = waveform;
  wf.n_snapshots = 2 * group_size;
  const GroupingSpec spec{group_size};
  MultipathProfile mp{static_paths, sensor_path};
  const auto clean = synthesize_clean(wf, scheme, TouchTimeline{}, mp, SensorGeometry{}, MechanicalParams{});

  std::vector<double> e1(trials), e2(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    ChannelTrace t = clean;
    apply_noise(t, NoiseSpec{snr_db, derive_seed(seed, 1, i), std::nullopt});
    const auto ps = group_phases(t, scheme, spec);
    e1[i] = ps.dphi[0][0] * kDeg;
    e2[i] = ps.dphi[1][0] * kDeg;
  });
  PhaseErrorStats st;
  st.std1_deg = sample_std(e1);
  st.std2_deg = sample_std(e2);
  std::vector<double> both(e1);
  both.insert(both.end(), e2.begin(), e2.end());
  st.pooled_deg = sample_std(both);
  st.samples = trials;
  return st;
}

std::vector<SnrSweepRow> run_snr_sweep(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& p = cfg.primary();
  const std::size_t ng =
      resolve_group_size(cfg, {p.scheme.read_freq_port1(), p.scheme.read_freq_port2()});
  std::vector<SnrSweepRow> rows;
  const auto& sw = cfg.sweep;
  const auto steps = static_cast<std::size_t>(std::floor((sw.snr_stop_db - sw.snr_start_db) / sw.snr_step_db + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double snr = sw.snr_start_db + static_cast<double>(i) * sw.snr_step_db;
    rows.push_back(SnrSweepRow{snr, phase_error_stats(cfg.waveform, p.scheme, cfg.static_paths, p.path, snr, ng,
                                                      sw.trials, derive_seed(seed, 2, i), sw.workers)});
  }
  return rows;
}

std::optional<double> snr_threshold(const std::vector<SnrSweepRow>& rows, double limit_deg) {
  std::optional<double> out;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->stats.pooled_deg > limit_deg) break;
    out = it->snr_db;
  }
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs paired samples");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

SensorModel calibrate(const ExperimentConfig& cfg) {
  const auto& p = cfg.primary();
  return fit_model(generate_sweep(cfg.calibration.locations_mm, cfg.calibration.forces_n, p.geom, p.mech,
                                  cfg.waveform.carrier_hz));
}

Estimate closed_loop_trial(const ExperimentConfig& cfg, const SensorModel& model, const Touch& touch,
                           std::size_t group_size, std::uint64_t seed) {
  SensorSetup s = cfg.primary();
  s.timeline = TouchTimeline({TimelineEntry{0, std::nullopt}, TimelineEntry{group_size, touch}});
  WaveformConfig wf = cfg.waveform;
  wf.n_snapshots = 3 * group_size;
  NoiseSpec noise = cfg.noise;
  noise.seed = seed;
  const auto trace = synthesize_scene(wf, std::span<const SensorSetup>(&s, 1), cfg.static_paths, noise);
  const auto series = anchor(group_phases(trace, s.scheme, GroupingSpec{group_size}), trace.sensors[0].no_touch);
  return invert(model, series.cumulative[0].back(), series.cumulative[1].back());
}

ForceSweepResult run_force_sweep(const ExperimentConfig& cfg, const SensorModel& model, std::uint64_t seed) {
  const auto& p = cfg.primary();
  const std::size_t ng =
      resolve_group_size(cfg, {p.scheme.read_freq_port1(), p.scheme.read_freq_port2()});
  const auto& sw = cfg.sweep;
  ForceSweepResult res;
  res.trials.resize(sw.trials);
  parallel_for(sw.trials, sw.workers, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, 3, i));
    std::uniform_real_distribution<double> force(sw.force_min_n, sw.force_max_n);
    const Touch touch{force(rng), sw.test_locations_mm[i % sw.test_locations_mm.size()]};
    res.trials[i] = ForceTrial{i, touch.force_n, touch.location_mm,
                               closed_loop_trial(cfg, model, touch, ng, derive_seed(seed, 4, i))};
  });
  std::vector<double> ef, el;
  for (const auto& t : res.trials) {
    ef.push_back(std::abs(t.estimate.force_n - t.force_true_n));
    el.push_back(std::abs(t.estimate.location_mm - t.location_true_mm));
  }
  res.median_force_err_n = quantile(ef, 0.5);
  res.median_location_err_mm = quantile(el, 0.5);
  return res;
}

CrosstalkResult run_crosstalk(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<SensorSetup> sensors = cfg.sensors;
  if (sensors.size() < 2) sensors.push_back(default_second_sensor(sensors.front()));
  std::vector<double> freqs;
  for (const auto& s : sensors) {
    freqs.push_back(s.scheme.read_freq_port1());
    freqs.push_back(s.scheme.read_freq_port2());
  }
  CrosstalkResult res;
  res.group_size = resolve_group_size(cfg, freqs);
  const std::size_t ng = res.group_size;
  const std::size_t groups = 5;
  WaveformConfig wf = cfg.waveform;
  wf.n_snapshots = groups * ng;

  // Sensor 1 steps at groups 1 and 3, sensor 2 at groups 2 and 4.
  const TouchTimeline steps1({TimelineEntry{0, std::nullopt}, TimelineEntry{ng, Touch{3.0, 40.0}},
                              TimelineEntry{3 * ng, Touch{6.0, 30.0}}});
  const TouchTimeline steps2({TimelineEntry{0, std::nullopt}, TimelineEntry{2 * ng, Touch{4.0, 50.0}},
                              TimelineEntry{4 * ng, Touch{7.0, 25.0}}});
  const TouchTimeline idle{};

  res.trials.resize(cfg.sweep.trials);
  parallel_for(cfg.sweep.trials, cfg.sweep.workers, [&](std::size_t i) {
    NoiseSpec noise = cfg.noise;
    noise.seed = derive_seed(seed, 5, i);
    auto run = [&](const TouchTimeline& t1, const TouchTimeline& t2) {
      std::vector<SensorSetup> s = sensors;
      s[0].timeline = t1;
      s[1].timeline = t2;
      const auto trace = synthesize_scene(wf, s, cfg.static_paths, noise);
      const GroupingSpec spec{ng};
      return std::array<PhaseSeries, 2>{group_phases(trace, s[0].scheme, spec),
                                        group_phases(trace, s[1].scheme, spec)};
    };
    const auto both = run(steps1, steps2);
    const auto only1 = run(steps1, idle);
    const auto only2 = run(idle, steps2);
    CrosstalkTrial t;
    t.index = i;
    for (std::size_t port = 0; port < 2; ++port)
      for (std::size_t g = 0; g + 1 < groups; ++g) {
        t.crosstalk1_deg = std::max(
            t.crosstalk1_deg, std::abs(wrap_angle(both[0].dphi[port][g] - only1[0].dphi[port][g])) * kDeg);
        t.crosstalk2_deg = std::max(
            t.crosstalk2_deg, std::abs(wrap_angle(both[1].dphi[port][g] - only2[1].dphi[port][g])) * kDeg);
      }
    res.trials[i] = t;
  });
  std::vector<double> all;
  for (const auto& t : res.trials) {
    all.push_back(std::max(t.crosstalk1_deg, t.crosstalk2_deg));
    res.max_deg = std::max(res.max_deg, all.back());
  }
  res.median_deg = quantile(all, 0.5);
  return res;
}

void write_snr_sweep_csv(std::ostream& os, const std::vector<SnrSweepRow>& rows) {
  os << "snr_db,trials,phase_std1_deg,phase_std2_deg,phase_std_deg\n";
  for (const auto& r : rows)
    os << format_number(r.snr_db) << ',' << r.stats.samples << ',' << format_number(r.stats.std1_deg) << ','
       << format_number(r.stats.std2_deg) << ',' << format_number(r.stats.pooled_deg) << '\n';
}

void write_force_sweep_csv(std::ostream& os, const ForceSweepResult& res) {
  os << "row,index,force_true_n,location_true_mm,force_est_n,location_est_mm,force_err_n,location_err_mm,"
        "residual,in_range\n";
  std::vector<double> ef, el;
  for (const auto& t : res.trials) {
    const double dfe = std::abs(t.estimate.force_n - t.force_true_n);
    const double dle = std::abs(t.estimate.location_mm - t.location_true_mm);
    ef.push_back(dfe);
    el.push_back(dle);
    os << "trial," << t.index << ',' << format_number(t.force_true_n) << ',' << format_number(t.location_true_mm)
       << ',' << format_number(t.estimate.force_n) << ',' << format_number(t.estimate.location_mm) << ','
       << format_number(dfe) << ',' << format_number(dle) << ',' << format_number(t.estimate.residual) << ','
       << (t.estimate.in_range ? 1 : 0) << '\n';
  }
  for (int q : {10, 25, 50, 75, 90})
    os << "cdf," << q << ",,,,," << format_number(quantile(ef, q / 100.0)) << ','
       << format_number(quantile(el, q / 100.0)) << ",,\n";
}

void write_crosstalk_csv(std::ostream& os, const CrosstalkResult& res) {
  os << "row,index,group_size,crosstalk1_deg,crosstalk2_deg\n";
  for (const auto& t : res.trials)
    os << "trial," << t.index << ',' << res.group_size << ',' << format_number(t.crosstalk1_deg) << ','
       << format_number(t.crosstalk2_deg) << '\n';
  os << "max,," << res.group_size << ',' << format_number(res.max_deg) << ",\n";
  os << "median,," << res.group_size << ',' << format_number(res.median_deg) << ",\n";
}

}  // namespace bsforce
