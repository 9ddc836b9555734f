#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bsforce/clocks.hpp"

using namespace bsforce;

namespace {

// Brute-force overlap oracle: fraction of densely sampled instants where
// both clocks are on.
double sampled_overlap(const ClockScheme& s, int samples) {
  int both = 0;
  const double period = 1.0 / s.clock_a.frequency;
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 0.5) / samples * period;
    both += is_on(s.clock_a, t) && is_on(s.clock_b, t);
  }
  return static_cast<double>(both) / samples;
}

// Sampled DFT of is_on over `periods` periods at `spp` samples per period.
std::complex<double> sampled_coefficient(const SwitchClock& c, int p, int spp, int periods) {
  std::complex<double> acc{};
  const int total = spp * periods;
  for (int i = 0; i < total; ++i) {
    // Midpoint sampling keeps window edges off the sample grid.
    const double u = (i + 0.5) / spp;
    const double t = u / c.frequency;
    if (is_on(c, t)) acc += std::polar(1.0, -2.0 * std::numbers::pi * p * u);
  }
  return acc / static_cast<double>(total);
}

}  // namespace

TEST_CASE("make_clock validates and matches declared window") {
  CHECK_THROWS_AS(make_clock(0.0, 0.25, 0.0), std::domain_error);
  CHECK_THROWS_AS(make_clock(1000.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(make_clock(1000.0, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(make_clock(-5.0, 0.5, 0.0), std::domain_error);

  const auto c = make_clock(1000.0, 0.25, 0.0);
  CHECK(is_on(c, 0.0));
  CHECK(is_on(c, 0.1e-3));
  CHECK(is_on(c, 0.249e-3));
  CHECK_FALSE(is_on(c, 0.3e-3));
  CHECK(is_on(c, 1.1e-3));

  // 2 kHz, offset half a period: on during [0.25, 0.375) ms of each 0.5 ms.
  const auto b = make_clock(2000.0, 0.25, 0.5);
  CHECK_FALSE(is_on(b, 0.24e-3));
  CHECK(is_on(b, 0.26e-3));
  CHECK(is_on(b, 0.37e-3));
  CHECK_FALSE(is_on(b, 0.38e-3));
  CHECK(is_on(b, 0.76e-3));

  const auto sq = make_clock(1.0, 0.5, 0.0);
  CHECK(is_on(sq, 0.0));
  CHECK(is_on(sq, 0.49));
  CHECK_FALSE(is_on(sq, 0.5));
  CHECK_FALSE(is_on(sq, 0.99));

  CHECK(make_clock(10.0, 0.5, 1.25).phase_offset == doctest::Approx(0.25));
}

TEST_CASE("fourier_coefficient closed form") {
  const auto c = make_clock(1000.0, 0.25, 0.0);
  CHECK(fourier_coefficient(c, 0) == std::complex<double>(0.25, 0.0));
  CHECK(std::abs(fourier_coefficient(c, 4)) == 0.0);
  CHECK(std::abs(fourier_coefficient(c, 8)) == 0.0);
  CHECK(std::abs(fourier_coefficient(c, 1)) == doctest::Approx(std::sin(std::numbers::pi / 4) / std::numbers::pi));
  CHECK(std::abs(fourier_coefficient(c, 1)) == doctest::Approx(0.2251).epsilon(1e-4));
  CHECK_THROWS_AS(fourier_coefficient(c, -1), std::domain_error);
}

TEST_CASE("fourier_coefficient matches sampled DFT at 256 samples per period") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> duty(0.05, 0.95), off(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Duty and offset on the sample grid so the sampled wave is exact.
    const double d = std::round(duty(rng) * 256.0) / 256.0;
    const double o = std::round(off(rng) * 256.0) / 256.0;
    const auto c = make_clock(1000.0, d, o);
    for (int p = 0; p <= 8; ++p) {
      const auto sampled = sampled_coefficient(c, p, 256, 4);
      const auto exact = fourier_coefficient(c, p);
      // With edges on the sample grid the sampled DFT is a Dirichlet kernel:
      // |X_p| = |sin(p pi d)| / (256 sin(p pi / 256)) = |a_p| x / sin x, x = p pi / 256.
      const double x = std::numbers::pi * p / 256.0;
      const double kernel = p == 0 ? 1.0 : x / std::sin(x);
      CHECK(std::abs(std::abs(sampled) - std::abs(exact) * kernel) <= 1e-9);
    }
  }
}

TEST_CASE("preset scheme read frequencies and disjointness") {
  const auto s = preset_scheme(1000.0);
  CHECK(s.read_freq_port1() == 1000.0);
  CHECK(s.read_freq_port2() == 4000.0);
  CHECK(s.clock_b.frequency == 2000.0);
  CHECK(s.clock_b.phase_offset == 0.5);

  const auto s2 = preset_scheme(1400.0);
  CHECK(s2.read_freq_port1() == doctest::Approx(1400.0));
  CHECK(s2.read_freq_port2() == doctest::Approx(5600.0));

  for (double fs : {1.0, 37.0, 1000.0, 1400.0, 2222.5, 1e5}) {
    const auto rep = verify_disjoint(preset_scheme(fs));
    CHECK(rep.disjoint);
    CHECK(rep.overlap_fraction == 0.0);
  }
  CHECK_THROWS_AS(preset_scheme(0.0), std::domain_error);
}

TEST_CASE("verify_disjoint interval arithmetic against dense sampling") {
  const ClockScheme overlapping{make_clock(1000.0, 0.25, 0.0), make_clock(2000.0, 0.25, 0.0)};
  const auto rep = verify_disjoint(overlapping);
  CHECK_FALSE(rep.disjoint);
  CHECK(rep.overlap_fraction == doctest::Approx(0.125));
  CHECK(sampled_overlap(overlapping, 100000) == doctest::Approx(0.125).epsilon(1e-4));

  const ClockScheme wide{make_clock(1000.0, 0.5, 0.0), make_clock(2000.0, 0.25, 0.5)};
  CHECK_FALSE(verify_disjoint(wide).disjoint);
  CHECK(verify_disjoint(wide).overlap_fraction == doctest::Approx(sampled_overlap(wide, 100000)).epsilon(1e-4));

  // Random pairs: exact measure agrees with sampling.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const ClockScheme s{make_clock(500.0, 0.05 + 0.9 * u(rng), u(rng)), make_clock(1000.0, 0.05 + 0.9 * u(rng), u(rng))};
    CHECK(verify_disjoint(s).overlap_fraction == doctest::Approx(sampled_overlap(s, 200000)).epsilon(2e-4));
  }
}

TEST_CASE("make_scheme requires f_b = 2 f_a") {
  CHECK_NOTHROW(make_scheme(make_clock(1000, 0.25, 0), make_clock(2000, 0.25, 0.5)));
  CHECK_THROWS_AS(make_scheme(make_clock(1000, 0.25, 0), make_clock(3000, 0.25, 0.5)), std::domain_error);
}

TEST_CASE("harmonic_support") {
  CHECK(harmonic_support(make_clock(1000, 0.25, 0), 8) == std::set<int>{1, 2, 3, 5, 6, 7});
  CHECK(harmonic_support(make_clock(1000, 0.5, 0), 6) == std::set<int>{1, 3, 5});
  CHECK(harmonic_support(make_clock(1000, 0.75, 0), 8) == std::set<int>{1, 2, 3, 5, 6, 7});
  CHECK_THROWS_AS(harmonic_support(make_clock(1000, 0.5, 0), 0), std::domain_error);

  // clock_b of the preset: nothing at its 4th harmonic (8 f_s), energy at its 2nd (4 f_s).
  const auto s = preset_scheme(1000.0);
  CHECK(std::abs(fourier_coefficient(s.clock_b, 4)) == 0.0);
  CHECK(std::abs(fourier_coefficient(s.clock_b, 2)) > 0.1);
  CHECK(std::abs(fourier_coefficient(s.clock_a, 4)) == 0.0);
}

TEST_CASE("complementary duties share magnitude spectra") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 40; ++i) {
    const double d = u(rng);
    const auto a = make_clock(100.0, d, 0.0);
    const auto b = make_clock(100.0, 1.0 - d, 0.3);
    CHECK(harmonic_support(a, 24) == harmonic_support(b, 24));
    for (int p = 1; p <= 24; ++p)
      CHECK(std::abs(fourier_coefficient(a, p)) == doctest::Approx(std::abs(fourier_coefficient(b, p))));
  }
  // Quarter duties: zeros at multiples of 4.
  for (int p : {4, 8, 12, 16})
    CHECK(std::abs(fourier_coefficient(make_clock(1, 0.25, 0.1), p)) == 0.0);
}
