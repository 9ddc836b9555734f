#pragma once

// Synthesis of the periodic wideband channel estimates H[k, n] a reader
// observes: static multipath, the switch-modulated reflections from one or
// more two-ended sensors, complex Gaussian noise and optional quantization.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsforce/clocks.hpp"
#include "bsforce/transducer.hpp"

namespace bsforce {

using cdouble = std::complex<double>;

struct WaveformConfig {
  std::size_t n_subcarriers = 64;
  double subcarrier_spacing_hz = 12.5e6 / 64.0;
  double frame_period_s = 720.0 / 12.5e6;
  double carrier_hz = 2.4e9;
  std::size_t n_snapshots = 6250;

  void validate() const;
  double snapshot_rate() const { return 1.0 / frame_period_s; }
};

struct PathTerm {
  cdouble amplitude{0.0, 0.0};
  double distance_m = 0.0;
};

struct MultipathProfile {
  std::vector<PathTerm> paths;
  PathTerm sensor_path{{1.0, 0.0}, 0.0};
};

struct TimelineEntry {
  std::size_t start_snapshot = 0;
  TouchEvent touch;
};

/// Piecewise-constant touch history; entry i holds from its start snapshot
/// up to the next entry's start.
class TouchTimeline {
 public:
  TouchTimeline() : entries_{TimelineEntry{0, std::nullopt}} {}
  explicit TouchTimeline(std::vector<TimelineEntry> entries);

  static TouchTimeline constant(TouchEvent touch) {
    return TouchTimeline({TimelineEntry{0, touch}});
  }

  const std::vector<TimelineEntry>& entries() const { return entries_; }
  const TouchEvent& at(std::size_t snapshot) const;

 private:
  std::vector<TimelineEntry> entries_;
};

struct NoiseSpec {
  std::optional<double> snr_db;  // relative to |alpha_s| per entry; nullopt is noiseless
  std::uint64_t seed = 0;
  std::optional<int> quantize_bits;

  void validate() const;
};

/// One sensor as seen by the reader.
struct SensorSetup {
  ClockScheme scheme;
  TouchTimeline timeline;
  PathTerm path{{1.0, 0.0}, 0.0};
  SensorGeometry geom;
  MechanicalParams mech;
};

/// Per-sensor metadata carried with a trace so a decoder needs no side
/// channel.
struct SensorInfo {
  ClockScheme scheme;
  PortPhases no_touch;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
};

/// Channel estimates stored snapshot-major: data[n * K + k].
struct ChannelTrace {
  WaveformConfig config;
  std::vector<cdouble> data;
  std::vector<SensorInfo> sensors;
  double reference_amplitude = 1.0;  // |alpha_s| of the first sensor
  Provenance provenance;

  std::size_t n_subcarriers() const { return config.n_subcarriers; }
  std::size_t n_snapshots() const { return config.n_snapshots; }
  cdouble& at(std::size_t k, std::size_t n) { return data[n * config.n_subcarriers + k]; }
  const cdouble& at(std::size_t k, std::size_t n) const {
    return data[n * config.n_subcarriers + k];
  }
  void validate() const;
};

/// Static paths plus the first sensor's reflection, no noise.
ChannelTrace synthesize_clean(const WaveformConfig& config, const ClockScheme& scheme,
                              const TouchTimeline& timeline, const MultipathProfile& mp,
                              const SensorGeometry& geom, const MechanicalParams& mech);

/// Superposes another sensor's modulated reflection. Rejects schemes whose read
/// frequencies coincide with any sensor already in the trace.
void add_second_sensor(ChannelTrace& trace, const ClockScheme& scheme,
                       const TouchTimeline& timeline, const PathTerm& sensor_path,
                       const SensorGeometry& geom, const MechanicalParams& mech);

/// Adds AWGN then quantizes, in that order. Deterministic in noise.seed.
void apply_noise(ChannelTrace& trace, const NoiseSpec& noise);

ChannelTrace synthesize(const WaveformConfig& config, const ClockScheme& scheme,
                        const TouchTimeline& timeline, const MultipathProfile& mp,
                        const NoiseSpec& noise, const SensorGeometry& geom,
                        const MechanicalParams& mech);

/// Full scene: static paths, any number of sensors (first one sets the noise
/// reference), then noise.
ChannelTrace synthesize_scene(const WaveformConfig& config, std::span<const SensorSetup> sensors,
                              const std::vector<PathTerm>& static_paths, const NoiseSpec& noise);

/// Radial speed whose Doppler shift equals the switching frequency.
double equivalent_doppler_velocity(double fs_hz, double carrier_hz);

/// Sampled switch state of a clock at snapshot n.
inline double switch_state(const SwitchClock& c, const WaveformConfig& cfg, std::size_t n) {
  return is_on(c, static_cast<double>(n) * cfg.frame_period_s) ? 1.0 : 0.0;
}

/// FNV-1a over a byte string; used for config digests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bsforce
