#pragma once

// Monte-Carlo drivers shared by the CLI, the acceptance suite and the Python
// bindings. Every trial draws its noise from a seed derived from one base
// seed, so results are reproducible and independent of worker count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "bsforce/calib.hpp"
#include "bsforce/config.hpp"

namespace bsforce {

/// splitmix64 of (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

struct PhaseErrorStats {
  double std1_deg = 0.0;
  double std2_deg = 0.0;
  double pooled_deg = 0.0;
  std::size_t samples = 0;
};

/// Spread of group-to-group phase errors for a static sensor over `trials`
/// two-group traces.
PhaseErrorStats phase_error_stats(const WaveformConfig& waveform, const ClockScheme& scheme,
                                  const std::vector<PathTerm>& static_paths, const PathTerm& sensor_path,
                                  std::optional<double> snr_db, std::size_t group_size, std::size_t trials,
                                  std::uint64_t seed, unsigned workers = 0);

struct SnrSweepRow {
  double snr_db = 0.0;
  PhaseErrorStats stats;
};

std::vector<SnrSweepRow> run_snr_sweep(const ExperimentConfig& cfg, std::uint64_t seed);

/// Lowest swept SNR from which the pooled std stays at or below limit_deg.
std::optional<double> snr_threshold(const std::vector<SnrSweepRow>& rows, double limit_deg);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ForceTrial {
  std::size_t index = 0;
  double force_true_n = 0.0;
  double location_true_mm = 0.0;
  Estimate estimate;
};

struct ForceSweepResult {
  std::vector<ForceTrial> trials;
  double median_force_err_n = 0.0;
  double median_location_err_mm = 0.0;
};

/// Touch applied after one no-touch group; decoded phases of the last group
/// are anchored and inverted through `model`.
Estimate closed_loop_trial(const ExperimentConfig& cfg, const SensorModel& model, const Touch& touch,
                           std::size_t group_size, std::uint64_t seed);

ForceSweepResult run_force_sweep(const ExperimentConfig& cfg, const SensorModel& model, std::uint64_t seed);

struct CrosstalkTrial {
  std::size_t index = 0;
  double crosstalk1_deg = 0.0;  // largest change in sensor-1 output caused by sensor 2 stepping
  double crosstalk2_deg = 0.0;
};

struct CrosstalkResult {
  std::vector<CrosstalkTrial> trials;
  std::size_t group_size = 0;
  double max_deg = 0.0;
  double median_deg = 0.0;
};

/// Needs two sensors; a 1.4 kHz preset is added when the config has one.
CrosstalkResult run_crosstalk(const ExperimentConfig& cfg, std::uint64_t seed);

SensorModel calibrate(const ExperimentConfig& cfg);

void write_snr_sweep_csv(std::ostream& os, const std::vector<SnrSweepRow>& rows);
void write_force_sweep_csv(std::ostream& os, const ForceSweepResult& res);
void write_crosstalk_csv(std::ostream& os, const CrosstalkResult& res);

}  // namespace bsforce
