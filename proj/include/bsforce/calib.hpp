#pragma once

// Sensor model: per-location cubic fits of the two port phases against
// force, interpolated linearly in the coefficients across location, and the
// inverse map from measured phases to (force, location).

#include <array>
#include <cstddef>
#include <numbers>
#include <vector>

#include "bsforce/transducer.hpp"

namespace bsforce {

struct CalibrationSample {
  double force_n = 0.0;
  double location_mm = 0.0;
  double phi1 = 0.0;  // absolute unwrapped port phases, radians
  double phi2 = 0.0;
};

enum class DatasetSource { simulated, imported };

struct CalibrationDataset {
  std::vector<CalibrationSample> samples;
  double carrier_hz = 0.0;
  PortPhases no_touch;  // reference subtracted before fitting
  DatasetSource source = DatasetSource::simulated;

  /// >= 2 distinct locations and >= 4 distinct forces at every location.
  void validate() const;
};

/// Cubic c0 + c1 F + c2 F^2 + c3 F^3.
using Cubic = std::array<double, 4>;

double eval_cubic(const Cubic& c, double force);

struct LocationFit {
  double location_mm = 0.0;
  Cubic port1{};
  Cubic port2{};
  double rms_deg = 0.0;
};

/// Phases are relative to no_touch: phi_model(F, l) + no_touch = absolute.
struct SensorModel {
  std::vector<LocationFit> fits;  // sorted by location
  double force_min_n = 0.0;
  double force_max_n = 0.0;
  double carrier_hz = 0.0;
  PortPhases no_touch;

  double location_min() const { return fits.front().location_mm; }
  double location_max() const { return fits.back().location_mm; }
};

struct ModelPhases {
  double phi1 = 0.0;  // relative to no-touch
  double phi2 = 0.0;
  bool in_range = true;  // force inside the calibrated range
};

struct Estimate {
  double force_n = 0.0;
  double location_mm = 0.0;
  double residual = 0.0;  // rad^2, wrapped misfit summed over ports
  bool in_range = true;   // residual below the reliability threshold
};

struct InvertOptions {
  double force_step_n = 0.05;
  double location_step_mm = 0.25;
  double tolerance = 1e-3;  // N and mm
  double residual_threshold = (3.0 * std::numbers::pi / 180.0) * (3.0 * std::numbers::pi / 180.0);
  std::size_t refine_candidates = 4;
};

CalibrationDataset generate_sweep(const std::vector<double>& locations_mm,
                                  const std::vector<double>& forces_n, const SensorGeometry& geom,
                                  const MechanicalParams& mech, double carrier_hz);

/// Least-squares cubic in force per location and port on no-touch-referenced
/// phases. Throws std::invalid_argument on a rank-deficient design.
SensorModel fit_model(const CalibrationDataset& data);

/// Location must lie inside the calibrated span (std::out_of_range otherwise).
ModelPhases model_forward(const SensorModel& model, double force_n, double location_mm);

/// Interpolated coefficients at a location.
std::array<Cubic, 2> model_coefficients(const SensorModel& model, double location_mm);

/// Phases are absolute and anchored (decoder cumulative output); the model's
/// no-touch reference is subtracted before matching.
Estimate invert(const SensorModel& model, double phi1, double phi2, const InvertOptions& opts = {});

}  // namespace bsforce
