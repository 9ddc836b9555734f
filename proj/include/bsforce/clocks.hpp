#pragma once

// Duty-cycled switch clocks for two-ended backscatter modulation.
//
// Each sensor end is connected to the antenna by its own RF switch. Port 1
// is driven by clock_a at f_s and is read at f_s; port 2 is driven by a
// 2 f_s clock whose second harmonic (4 f_s) is the read frequency for port 2.
// With 25% duty the fourth harmonic of clock_a vanishes, so the two read
// frequencies never share energy from the fundamental pair.

#include <complex>
#include <set>

namespace bsforce {

struct SwitchClock {
  double frequency = 0.0;     // Hz
  double duty = 0.0;          // fraction of the period the switch is on
  double phase_offset = 0.0;  // start of the on-window, fraction of a period

  double period() const { return 1.0 / frequency; }
};

struct ClockScheme {
  SwitchClock clock_a;  // port 1
  SwitchClock clock_b;  // port 2

  double fs() const { return clock_a.frequency; }
  double read_freq_port1() const { return clock_a.frequency; }
  double read_freq_port2() const { return 2.0 * clock_b.frequency; }
};

struct DisjointReport {
  bool disjoint = true;
  double overlap_fraction = 0.0;
};

/// Throws std::domain_error unless frequency > 0 and 0 < duty < 1.
/// phase_offset is reduced modulo 1.
SwitchClock make_clock(double frequency, double duty, double phase_offset);

/// True iff frac(t*f - offset) lies in [0, duty).
bool is_on(const SwitchClock& clock, double t);

/// Complex Fourier coefficient a_p of the 0/1 square wave, for harmonic
/// index p >= 0. a_0 equals the duty. Harmonics with p*duty integral are
/// returned as exact zeros.
std::complex<double> fourier_coefficient(const SwitchClock& clock, int p);

/// Clock pair used throughout: clock_a = (f_s, 25%, 0), clock_b = (2 f_s,
/// 25%, 0.5). clock_b's on-windows fall in [0.25, 0.375) and [0.75, 0.875)
/// of the f_s period, which never meet clock_a's [0, 0.25).
ClockScheme preset_scheme(double fs);

/// Validates a custom pair: both clocks valid and f_b = 2 f_a.
ClockScheme make_scheme(const SwitchClock& a, const SwitchClock& b);

/// Exact interval-arithmetic overlap of the two on-sets over their common
/// period.
DisjointReport verify_disjoint(const ClockScheme& scheme);

/// Harmonic indices 1..n_max with |a_p| > 1e-12.
std::set<int> harmonic_support(const SwitchClock& clock, int n_max);

}  // namespace bsforce
