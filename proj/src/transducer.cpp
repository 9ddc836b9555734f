#include "bsforce/transducer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bsforce {

void SensorGeometry::validate() const {
  if (!(length_mm > 0 && signal_width_mm > 0 && ground_width_mm > 0 && height_mm > 0))
    throw std::domain_error("sensor dimensions must be positive");
  if (!(eps_eff >= 1.0)) throw std::domain_error("eps_eff must be >= 1");
}

void MechanicalParams::validate(const SensorGeometry& geom) const {
  if (!(contact_threshold_n >= 0.0)) throw std::domain_error("contact_threshold must be >= 0");
  if (!(force_scale_n > 0.0)) throw std::domain_error("force_scale must be > 0");
  if (!(max_halfwidth_mm > 0.0 && max_halfwidth_mm <= 0.5 * geom.length_mm))
    throw std::domain_error("max_halfwidth must lie in (0, L/2]");
  if (!(asymmetry_exponent >= 0.0)) throw std::domain_error("asymmetry_exponent must be >= 0");
}

double wrap_angle(double rad) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(rad + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

double PortPhases::phi1_wrapped() const { return wrap_angle(phi1); }
double PortPhases::phi2_wrapped() const { return wrap_angle(phi2); }

double impedance(double height, double width) {
  if (!(height > 0.0) || !(width > 0.0))
    throw std::domain_error("impedance: height and width must be positive");
  const double r = height / width;
  return 60.0 * std::log(6.0 * r + std::sqrt(1.0 + 4.0 * r * r));
}

double solve_width_ratio(double z_target) {
  if (!(z_target > 0.0)) throw std::domain_error("target impedance must be positive");
  // Z grows with h/w; bisect on log(h/w).
  double lo = -40.0, hi = 40.0;
  auto z_at = [](double log_r) { return impedance(std::exp(log_r), 1.0); };
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double z = z_at(mid);
    if (std::abs(z - z_target) < 1e-9) return std::exp(-mid);
    (z < z_target ? lo : hi) = mid;
  }
  return std::exp(-0.5 * (lo + hi));
}

ShortingState shorting_segment(const TouchEvent& touch, const MechanicalParams& mech,
                               const SensorGeometry& geom) {
  if (!touch) return std::nullopt;
  const double L = geom.length_mm;
  const double F = touch->force_n;
  const double lc = touch->location_mm;
  if (!(F >= 0.0)) throw std::domain_error("touch force must be >= 0");
  if (!(lc >= 0.0 && lc <= L)) throw std::domain_error("touch location outside [0, L]");
  if (F <= mech.contact_threshold_n) return std::nullopt;

  const double excess = F - mech.contact_threshold_n;
  const double w = mech.max_halfwidth_mm * (1.0 - std::exp(-excess / mech.force_scale_n));
  const double k = mech.asymmetry_exponent;
  const double a = std::clamp(lc - 2.0 * w * std::pow(1.0 - lc / L, k), 0.0, lc);
  const double b = std::clamp(lc + 2.0 * w * std::pow(lc / L, k), lc, L);
  return Segment{a, b};
}

double beta_per_mm(double carrier_hz, double eps_eff) {
  return 2.0 * std::numbers::pi * carrier_hz * std::sqrt(eps_eff) / kSpeedOfLight * 1e-3;
}

PortPhases port_phases(const ShortingState& state, const SensorGeometry& geom,
                       double carrier_hz) {
  const double beta = beta_per_mm(carrier_hz, geom.eps_eff);
  const double L = geom.length_mm;
  if (!state) return PortPhases{-2.0 * beta * L, -2.0 * beta * L, carrier_hz};
  return PortPhases{-2.0 * beta * state->a_mm + std::numbers::pi,
                    -2.0 * beta * (L - state->b_mm) + std::numbers::pi, carrier_hz};
}

PortPhases no_touch_phases(const SensorGeometry& geom, double carrier_hz) {
  return port_phases(std::nullopt, geom, carrier_hz);
}

double phase_per_mm(double carrier_hz, double eps_eff) {
  return 2.0 * beta_per_mm(carrier_hz, eps_eff) * 180.0 / std::numbers::pi;
}

}  // namespace bsforce
