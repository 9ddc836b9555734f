#include "bsforce/clocks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bsforce {

namespace {

double frac(double x) { return x - std::floor(x); }

// On-windows of a clock inside [0, span) where span is a whole number of
// clock periods, expressed in seconds.
std::vector<std::pair<double, double>> on_windows(const SwitchClock& c,
                                                  long cycles) {
  std::vector<std::pair<double, double>> out;
  const double period = c.period();
  for (long i = -1; i <= cycles; ++i) {
    double start = (static_cast<double>(i) + c.phase_offset) * period;
    double stop = start + c.duty * period;
    double span = static_cast<double>(cycles) * period;
    start = std::max(start, 0.0);
    stop = std::min(stop, span);
    if (stop > start) out.emplace_back(start, stop);
  }
  return out;
}

}  // namespace

SwitchClock make_clock(double frequency, double duty, double phase_offset) {
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw std::domain_error("clock frequency must be positive");
  if (!(duty > 0.0 && duty < 1.0))
    throw std::domain_error("clock duty must lie in (0, 1)");
  if (!std::isfinite(phase_offset))
    throw std::domain_error("clock phase offset must be finite");
  return SwitchClock{frequency, duty, frac(phase_offset)};
}

bool is_on(const SwitchClock& clock, double t) {
  return frac(t * clock.frequency - clock.phase_offset) < clock.duty;
}

std::complex<double> fourier_coefficient(const SwitchClock& clock, int p) {
  if (p < 0) throw std::domain_error("harmonic index must be non-negative");
  if (p == 0) return {clock.duty, 0.0};
  const double pd = static_cast<double>(p) * clock.duty;
  if (std::abs(pd - std::round(pd)) < 1e-12) return {0.0, 0.0};
  const double pi = std::numbers::pi;
  const double mag = std::sin(pi * pd) / (pi * p);
  // Window centre sets the linear phase term.
  const double centre = clock.phase_offset + 0.5 * clock.duty;
  return std::polar(1.0, -2.0 * pi * p * centre) * mag;
}

ClockScheme preset_scheme(double fs) {
  if (!(fs > 0.0)) throw std::domain_error("f_s must be positive");
  return ClockScheme{make_clock(fs, 0.25, 0.0), make_clock(2.0 * fs, 0.25, 0.5)};
}

ClockScheme make_scheme(const SwitchClock& a, const SwitchClock& b) {
  auto ca = make_clock(a.frequency, a.duty, a.phase_offset);
  auto cb = make_clock(b.frequency, b.duty, b.phase_offset);
  if (std::abs(cb.frequency - 2.0 * ca.frequency) > 1e-9 * ca.frequency)
    throw std::domain_error("clock_b frequency must be twice clock_a frequency");
  return ClockScheme{ca, cb};
}

DisjointReport verify_disjoint(const ClockScheme& scheme) {
  const auto& a = scheme.clock_a;
  const auto& b = scheme.clock_b;
  // Common period: smallest m with m * f_b / f_a integral.
  const double ratio = b.frequency / a.frequency;
  long m = 0;
  for (long trial = 1; trial <= 1000; ++trial) {
    double r = ratio * static_cast<double>(trial);
    if (std::abs(r - std::round(r)) < 1e-9) {
      m = trial;
      break;
    }
  }
  if (m == 0) throw std::domain_error("clock frequencies have no common period");
  const long cycles_b = std::lround(ratio * static_cast<double>(m));
  const double span = static_cast<double>(m) * a.period();

  const auto wa = on_windows(a, m);
  const auto wb = on_windows(b, cycles_b);
  double overlap = 0.0;
  for (const auto& [s1, e1] : wa)
    for (const auto& [s2, e2] : wb) overlap += std::max(0.0, std::min(e1, e2) - std::max(s1, s2));

  DisjointReport rep;
  rep.overlap_fraction = overlap / span;
  // Clean up rounding around touching window edges.
  if (rep.overlap_fraction < 1e-12) rep.overlap_fraction = 0.0;
  rep.disjoint = rep.overlap_fraction == 0.0;
  return rep;
}

std::set<int> harmonic_support(const SwitchClock& clock, int n_max) {
  if (n_max < 1) throw std::domain_error("n_max must be at least 1");
  std::set<int> out;
  for (int p = 1; p <= n_max; ++p)
    if (std::abs(fourier_coefficient(clock, p)) > 1e-12) out.insert(p);
  return out;
}

}  // namespace bsforce
