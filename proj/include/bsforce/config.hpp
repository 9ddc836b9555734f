#pragma once

// Experiment configuration: one JSON document with sections
//   waveform, clocks, geometry, mechanics, multipath, noise, timeline,
//   second_sensor, grouping, calibration, sweep
// Every section is optional and defaults to the 64-subcarrier 12.5 MHz
// preset at 2.4 GHz with a 1 kHz sensor clock. Unknown keys are rejected.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsforce/chansim.hpp"
#include "bsforce/serialize.hpp"

namespace bsforce {

struct CalibrationSettings {
  std::vector<double> locations_mm{20, 30, 40, 50, 60};
  std::vector<double> forces_n;  // defaults to 1..8 N in 0.5 N steps

  CalibrationSettings();
};

struct SweepSettings {
  std::size_t trials = 100;
  double snr_start_db = -30.0;
  double snr_stop_db = 40.0;
  double snr_step_db = 2.5;
  std::vector<double> test_locations_mm{20, 40, 55, 60};
  double force_min_n = 1.0;
  double force_max_n = 8.0;
  unsigned workers = 0;  // 0 uses the hardware concurrency
};

struct ExperimentConfig {
  WaveformConfig waveform;
  std::vector<SensorSetup> sensors;  // primary first; at most two
  std::vector<PathTerm> static_paths;
  NoiseSpec noise;
  std::optional<std::size_t> group_size;  // nullopt selects the smallest integral-cycle size
  CalibrationSettings calibration;
  SweepSettings sweep;

  const SensorSetup& primary() const { return sensors.front(); }
  std::vector<ClockScheme> schemes() const;

  /// Cross-section checks: Nyquist bound, timeline within the trace, second
  /// sensor read frequencies distinct. Throws ConfigError.
  void validate() const;
};

/// Built-in defaults: direct path 40 dB above the sensor reflection plus two
/// weaker static reflectors.
ExperimentConfig default_config();

ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Group size to use for a set of read frequencies under this config.
std::size_t resolve_group_size(const ExperimentConfig& cfg, const std::vector<double>& read_freqs);

}  // namespace bsforce
