#pragma once

// Sensor physics: microstrip impedance, round-trip phase along the line and
// a phenomenological soft-beam map from (force, location) to the contact
// segment where the signal trace shorts onto ground.

#include <optional>

namespace bsforce {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct SensorGeometry {
  double length_mm = 80.0;
  double signal_width_mm = 2.5;
  double ground_width_mm = 6.0;
  double height_mm = 0.63;
  double eps_eff = 1.0;  // air substrate

  void validate() const;
};

/// Beam model parameters. Below contact_threshold the trace does not touch
/// ground; above it the contact half-width saturates towards max_halfwidth
/// with force scale force_scale. asymmetry_exponent skews the spread towards
/// the longer side of the line.
struct MechanicalParams {
  double contact_threshold_n = 0.5;
  double force_scale_n = 2.0;
  double max_halfwidth_mm = 15.0;
  double asymmetry_exponent = 1.0;

  void validate(const SensorGeometry& geom) const;
};

struct Touch {
  double force_n = 0.0;
  double location_mm = 0.0;
};

/// std::nullopt is the no-touch state.
using TouchEvent = std::optional<Touch>;

struct Segment {
  double a_mm = 0.0;
  double b_mm = 0.0;
};

/// std::nullopt is the open (unshorted) line.
using ShortingState = std::optional<Segment>;

struct PortPhases {
  double phi1 = 0.0;  // unwrapped, radians
  double phi2 = 0.0;
  double carrier_hz = 0.0;

  double phi1_wrapped() const;
  double phi2_wrapped() const;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double rad);

/// Z = 60 ln(6h/w + sqrt(1 + (2h/w)^2)).
double impedance(double height, double width);

/// Width-to-height ratio giving z_target ohms, by bisection on the
/// impedance formula (|Z - z_target| < 1e-6).
double solve_width_ratio(double z_target);

ShortingState shorting_segment(const TouchEvent& touch, const MechanicalParams& mech,
                               const SensorGeometry& geom);

/// Round-trip phase at each port. The open line reflects with phase 0 at the
/// far end; a short adds pi.
PortPhases port_phases(const ShortingState& state, const SensorGeometry& geom,
                       double carrier_hz);

/// Phase of the no-touch state; constant for a given geometry and carrier.
PortPhases no_touch_phases(const SensorGeometry& geom, double carrier_hz);

/// Round-trip phase change per millimetre of shorting-point travel, degrees.
double phase_per_mm(double carrier_hz, double eps_eff);

/// Propagation constant beta in rad/mm.
double beta_per_mm(double carrier_hz, double eps_eff);

}  // namespace bsforce
