#include "bsforce/chansim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bsforce/decoder.hpp"

namespace bsforce {

void WaveformConfig::validate() const {
  if (n_subcarriers < 1) throw std::invalid_argument("waveform: n_subcarriers must be >= 1");
  if (!(subcarrier_spacing_hz > 0.0))
    throw std::invalid_argument("waveform: subcarrier spacing must be > 0");
  if (!(frame_period_s > 0.0)) throw std::invalid_argument("waveform: frame period must be > 0");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("waveform: carrier must be > 0");
  if (n_snapshots < 1) throw std::invalid_argument("waveform: n_snapshots must be >= 1");
}

TouchTimeline::TouchTimeline(std::vector<TimelineEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty() || entries_.front().start_snapshot != 0)
    throw std::invalid_argument("timeline: first entry must start at snapshot 0");
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].start_snapshot <= entries_[i - 1].start_snapshot)
      throw std::invalid_argument("timeline: start snapshots must be strictly increasing");
}

const TouchEvent& TouchTimeline::at(std::size_t snapshot) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), snapshot,
                             [](std::size_t s, const TimelineEntry& e) { return s < e.start_snapshot; });
  return std::prev(it)->touch;
}

void NoiseSpec::validate() const {
  if (snr_db && !std::isfinite(*snr_db)) throw std::invalid_argument("noise: snr_db must be finite");
  if (quantize_bits && (*quantize_bits < 4 || *quantize_bits > 24))
    throw std::invalid_argument("noise: quantize_bits must lie in [4, 24]");
}

void ChannelTrace::validate() const {
  config.validate();
  if (data.size() != config.n_subcarriers * config.n_snapshots)
    throw std::invalid_argument("trace: data size does not match K x N");
  for (const auto& v : data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("trace: non-finite entry");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::vector<cdouble> steering(const WaveformConfig& cfg, double distance_m) {
  std::vector<cdouble> out(cfg.n_subcarriers);
  const double step = -2.0 * std::numbers::pi * cfg.subcarrier_spacing_hz * distance_m / kSpeedOfLight;
  for (std::size_t k = 0; k < cfg.n_subcarriers; ++k) out[k] = std::polar(1.0, step * static_cast<double>(k));
  return out;
}

void check_timeline(const TouchTimeline& tl, std::size_t n_snapshots) {
  if (tl.entries().back().start_snapshot >= n_snapshots)
    throw std::invalid_argument("timeline: start snapshot beyond trace length");
}

void check_nyquist(const WaveformConfig& cfg, const ClockScheme& scheme) {
  const auto rep = nyquist_check(cfg, scheme);
  if (!rep.ok) {
    std::ostringstream os;
    os << "read frequency " << rep.highest_read_hz << " Hz exceeds the Nyquist bound "
       << rep.bound_hz << " Hz";
    throw std::invalid_argument(os.str());
  }
}

// Adds alpha_s e^{-j2pi kF d_s/c} (s1 e^{-j phi1} + s2 e^{-j phi2}) for one sensor.
void accumulate_sensor(ChannelTrace& trace, const ClockScheme& scheme, const TouchTimeline& tl,
                       const PathTerm& path, const SensorGeometry& geom,
                       const MechanicalParams& mech) {
  const auto& cfg = trace.config;
  if (path.amplitude == cdouble{0.0, 0.0}) return;
  const auto steer = steering(cfg, path.distance_m);

  // Phases are piecewise constant; evaluate once per timeline entry.
  std::vector<std::pair<cdouble, cdouble>> entry_terms;
  for (const auto& e : tl.entries()) {
    const auto ph = port_phases(shorting_segment(e.touch, mech, geom), geom, cfg.carrier_hz);
    entry_terms.emplace_back(std::polar(1.0, -ph.phi1), std::polar(1.0, -ph.phi2));
  }

  const auto& entries = tl.entries();
  std::size_t entry = 0;
  const std::size_t K = cfg.n_subcarriers;
  for (std::size_t n = 0; n < cfg.n_snapshots; ++n) {
    while (entry + 1 < entries.size() && entries[entry + 1].start_snapshot <= n) ++entry;
    const cdouble m = switch_state(scheme.clock_a, cfg, n) * entry_terms[entry].first +
                      switch_state(scheme.clock_b, cfg, n) * entry_terms[entry].second;
    if (m == cdouble{0.0, 0.0}) continue;
    const cdouble am = path.amplitude * m;
    cdouble* row = trace.data.data() + n * K;
    for (std::size_t k = 0; k < K; ++k) row[k] += am * steer[k];
  }
}

std::string describe(const WaveformConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.n_subcarriers << ',' << c.subcarrier_spacing_hz << ',' << c.frame_period_s << ','
     << c.carrier_hz << ',' << c.n_snapshots;
  return os.str();
}

}  // namespace

ChannelTrace synthesize_clean(const WaveformConfig& config, const ClockScheme& scheme,
                              const TouchTimeline& timeline, const MultipathProfile& mp,
                              const SensorGeometry& geom, const MechanicalParams& mech) {
  config.validate();
  geom.validate();
  mech.validate(geom);
  check_nyquist(config, scheme);
  check_timeline(timeline, config.n_snapshots);

  ChannelTrace trace;
  trace.config = config;
  trace.data.assign(config.n_subcarriers * config.n_snapshots, cdouble{});
  trace.reference_amplitude = std::abs(mp.sensor_path.amplitude);
  trace.provenance.config_digest = fnv1a64(describe(config));

  std::vector<cdouble> stat(config.n_subcarriers, cdouble{});
  for (const auto& p : mp.paths) {
    if (!(p.distance_m >= 0.0)) throw std::invalid_argument("multipath: distances must be >= 0");
    const auto st = steering(config, p.distance_m);
    for (std::size_t k = 0; k < config.n_subcarriers; ++k) stat[k] += p.amplitude * st[k];
  }
  for (std::size_t n = 0; n < config.n_snapshots; ++n)
    std::copy(stat.begin(), stat.end(), trace.data.begin() + n * config.n_subcarriers);

  accumulate_sensor(trace, scheme, timeline, mp.sensor_path, geom, mech);
  trace.sensors.push_back(SensorInfo{scheme, no_touch_phases(geom, config.carrier_hz)});
  return trace;
}

void add_second_sensor(ChannelTrace& trace, const ClockScheme& scheme,
                       const TouchTimeline& timeline, const PathTerm& sensor_path,
                       const SensorGeometry& geom, const MechanicalParams& mech) {
  geom.validate();
  mech.validate(geom);
  check_nyquist(trace.config, scheme);
  check_timeline(timeline, trace.config.n_snapshots);
  const double mine[2] = {scheme.read_freq_port1(), scheme.read_freq_port2()};
  for (const auto& s : trace.sensors) {
    const double theirs[2] = {s.scheme.read_freq_port1(), s.scheme.read_freq_port2()};
    for (double a : mine)
      for (double b : theirs)
        if (a == b) throw std::invalid_argument("second sensor read frequency collides with an existing sensor");
  }
  accumulate_sensor(trace, scheme, timeline, sensor_path, geom, mech);
  trace.sensors.push_back(SensorInfo{scheme, no_touch_phases(geom, trace.config.carrier_hz)});
}

void apply_noise(ChannelTrace& trace, const NoiseSpec& noise) {
  noise.validate();
  trace.provenance.seed = noise.seed;
  if (noise.snr_db) {
    std::mt19937_64 rng(noise.seed);
    const double sigma = trace.reference_amplitude * std::pow(10.0, -*noise.snr_db / 20.0);
    std::normal_distribution<double> gauss(0.0, sigma / std::numbers::sqrt2);
    for (auto& v : trace.data) v += cdouble{gauss(rng), gauss(rng)};
  }
  if (noise.quantize_bits) {
    double full_scale = 0.0;
    for (const auto& v : trace.data)
      full_scale = std::max({full_scale, std::abs(v.real()), std::abs(v.imag())});
    if (full_scale > 0.0) {
      const double step = full_scale / std::ldexp(1.0, *noise.quantize_bits - 1);
      auto q = [step](double x) { return std::round(x / step) * step; };
      for (auto& v : trace.data) v = {q(v.real()), q(v.imag())};
    }
  }
}

ChannelTrace synthesize(const WaveformConfig& config, const ClockScheme& scheme,
                        const TouchTimeline& timeline, const MultipathProfile& mp,
                        const NoiseSpec& noise, const SensorGeometry& geom,
                        const MechanicalParams& mech) {
  auto trace = synthesize_clean(config, scheme, timeline, mp, geom, mech);
  apply_noise(trace, noise);
  return trace;
}

ChannelTrace synthesize_scene(const WaveformConfig& config, std::span<const SensorSetup> sensors,
                              const std::vector<PathTerm>& static_paths, const NoiseSpec& noise) {
  if (sensors.empty()) throw std::invalid_argument("scene needs at least one sensor");
  const auto& first = sensors.front();
  MultipathProfile mp{static_paths, first.path};
  auto trace = synthesize_clean(config, first.scheme, first.timeline, mp, first.geom, first.mech);
  for (std::size_t i = 1; i < sensors.size(); ++i) {
    const auto& s = sensors[i];
    add_second_sensor(trace, s.scheme, s.timeline, s.path, s.geom, s.mech);
  }
  apply_noise(trace, noise);
  return trace;
}

double equivalent_doppler_velocity(double fs_hz, double carrier_hz) {
  if (!(carrier_hz > 0.0)) throw std::domain_error("carrier must be positive");
  return kSpeedOfLight * fs_hz / carrier_hz;
}

}  // namespace bsforce
