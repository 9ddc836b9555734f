#include "bsforce/decoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bsforce {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Port {
  SwitchClock clock;
  double read_freq;
};

bool same_freq(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), 1.0); }

void push_scheme(std::vector<Port>& ports, const ClockScheme& s) {
  ports.push_back(Port{s.clock_a, s.read_freq_port1()});
  ports.push_back(Port{s.clock_b, s.read_freq_port2()});
}

// The requested scheme always occupies ports 0 and 1; other sensors follow.
std::vector<Port> ports_for(const ChannelTrace& trace, const ClockScheme& scheme) {
  std::vector<Port> ports;
  push_scheme(ports, scheme);
  for (const auto& s : trace.sensors) {
    if (same_freq(s.scheme.read_freq_port1(), scheme.read_freq_port1()) &&
        same_freq(s.scheme.read_freq_port2(), scheme.read_freq_port2()))
      continue;
    push_scheme(ports, s.scheme);
  }
  return ports;
}

// e^{-j 2 pi f n T} with the argument reduced before evaluation.
cdouble phasor(double f, double period, std::size_t n) {
  const double cyc = f * static_cast<double>(n) * period;
  return std::polar(1.0, -kTwoPi * (cyc - std::floor(cyc)));
}

// Raw projections, demixed estimates and mixing matrix for one group.
struct GroupFit {
  std::vector<std::vector<cdouble>> raw;    // [port][k]
  std::vector<std::vector<cdouble>> est;    // [port][k]
  Eigen::MatrixXcd mixing;                  // C[i][j] = <s_j, w_i>
  Eigen::MatrixXcd unmix;                   // C^{-1}
};

void check_group(const ChannelTrace& trace, std::size_t group, const GroupingSpec& spec) {
  if (spec.group_size == 0) throw std::invalid_argument("group size must be positive");
  if ((group + 1) * spec.group_size > trace.n_snapshots())
    throw std::out_of_range("phase group out of range");
}

GroupFit fit_group(const ChannelTrace& trace, const std::vector<Port>& ports, std::size_t group,
                   const GroupingSpec& spec, bool demix) {
  check_group(trace, group, spec);
  const auto& cfg = trace.config;
  const std::size_t K = cfg.n_subcarriers;
  const std::size_t M = ports.size();
  const std::size_t n0 = group * spec.group_size;
  const double inv = 1.0 / static_cast<double>(spec.group_size);

  GroupFit fit;
  fit.raw.assign(M, std::vector<cdouble>(K, cdouble{}));
  fit.mixing = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  std::vector<cdouble> w(M);
  std::vector<double> s(M);
  for (std::size_t n = n0; n < n0 + spec.group_size; ++n) {
    for (std::size_t i = 0; i < M; ++i) {
      w[i] = phasor(ports[i].read_freq, cfg.frame_period_s, n);
      s[i] = switch_state(ports[i].clock, cfg, n);
    }
    const cdouble* row = trace.data.data() + n * K;
    for (std::size_t i = 0; i < M; ++i) {
      auto& acc = fit.raw[i];
      const cdouble wi = w[i];
      for (std::size_t k = 0; k < K; ++k) acc[k] += row[k] * wi;
      for (std::size_t j = 0; j < M; ++j)
        if (s[j] != 0.0) fit.mixing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += wi;
    }
  }
  for (auto& r : fit.raw)
    for (auto& v : r) v *= inv;
  fit.mixing *= inv;

  if (demix) {
    fit.unmix = fit.mixing.inverse();
  } else {
    // Per-port gain only: the diagonal of the mixing matrix.
    fit.unmix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(M); ++i)
      fit.unmix(i, i) = 1.0 / fit.mixing(i, i);
  }
  fit.est.assign(M, std::vector<cdouble>(K, cdouble{}));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < M; ++i) {
      cdouble acc{};
      for (std::size_t j = 0; j < M; ++j)
        acc += fit.unmix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * fit.raw[j][k];
      fit.est[i][k] = acc;
    }
  return fit;
}

double to_db(double ratio) {
  if (!(ratio > 0.0)) return -kSnrCapDb;
  return std::clamp(10.0 * std::log10(ratio), -kSnrCapDb, kSnrCapDb);
}

// Signal and noise energies for one port in one group.
struct SnrParts {
  double signal = 0.0;      // mean_k |X|^2, noise-bias corrected
  double raw_energy = 0.0;  // mean_k |P|^2 at the read bin
  double floor_bin = 0.0;   // expected |P|^2 of noise alone in one bin
};

std::vector<std::size_t> off_bins(const WaveformConfig& cfg, const std::vector<Port>& ports,
                                  std::size_t group_size) {
  const double bin_hz = 1.0 / (static_cast<double>(group_size) * cfg.frame_period_s);
  const double nyq = 0.5 / cfg.frame_period_s;
  auto near_line = [&](std::size_t m) {
    const double f = std::min(static_cast<double>(m), static_cast<double>(group_size - m)) * bin_hz;
    if (f < 1.5 * bin_hz) return true;
    for (const auto& p : ports) {
      if (std::abs(f - aliased_frequency(p.read_freq, cfg.frame_period_s)) < 1.5 * bin_hz) return true;
      for (int h = 1; h <= 16; ++h) {
        const double fa = aliased_frequency(h * p.clock.frequency, cfg.frame_period_s);
        if (std::abs(f - fa) < 1.5 * bin_hz && fa <= nyq) return true;
      }
    }
    return false;
  };
  std::vector<std::size_t> candidates;
  for (std::size_t m = 1; m < group_size; ++m)
    if (!near_line(m)) candidates.push_back(m);
  if (candidates.empty()) {
    for (std::size_t m = 1; m < group_size; ++m) candidates.push_back(m);
  }
  constexpr std::size_t kMaxBins = 32;
  if (candidates.size() <= kMaxBins) return candidates;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < kMaxBins; ++i)
    picked.push_back(candidates[i * candidates.size() / kMaxBins]);
  return picked;
}

std::vector<SnrParts> snr_parts(const ChannelTrace& trace, const std::vector<Port>& ports,
                                std::size_t group, const GroupingSpec& spec,
                                std::size_t n_ports_wanted) {
  const auto fit = fit_group(trace, ports, group, spec, true);
  const auto& cfg = trace.config;
  const std::size_t K = cfg.n_subcarriers;
  const std::size_t M = ports.size();
  const std::size_t Ng = spec.group_size;
  const std::size_t n0 = group * Ng;

  // Residual after removing the fitted port terms and the group mean.
  std::vector<cdouble> resid(Ng * K);
  std::vector<cdouble> mean(K, cdouble{});
  for (std::size_t m = 0; m < Ng; ++m) {
    const std::size_t n = n0 + m;
    const cdouble* row = trace.data.data() + n * K;
    cdouble* out = resid.data() + m * K;
    for (std::size_t k = 0; k < K; ++k) out[k] = row[k];
    for (std::size_t j = 0; j < M; ++j)
      if (switch_state(ports[j].clock, cfg, n) != 0.0)
        for (std::size_t k = 0; k < K; ++k) out[k] -= fit.est[j][k];
    for (std::size_t k = 0; k < K; ++k) mean[k] += out[k];
  }
  for (auto& v : mean) v /= static_cast<double>(Ng);
  for (std::size_t m = 0; m < Ng; ++m)
    for (std::size_t k = 0; k < K; ++k) resid[m * K + k] -= mean[k];

  const auto bins = off_bins(cfg, ports, Ng);
  std::vector<double> energies;
  energies.reserve(bins.size() * K);
  std::vector<cdouble> acc(K);
  for (std::size_t b : bins) {
    std::fill(acc.begin(), acc.end(), cdouble{});
    for (std::size_t m = 0; m < Ng; ++m) {
      const double cyc = static_cast<double>(b * m % Ng) / static_cast<double>(Ng);
      const cdouble w = std::polar(1.0, -kTwoPi * cyc);
      const cdouble* r = resid.data() + m * K;
      for (std::size_t k = 0; k < K; ++k) acc[k] += r[k] * w;
    }
    for (std::size_t k = 0; k < K; ++k) energies.push_back(std::norm(acc[k] / static_cast<double>(Ng)));
  }
  auto mid = energies.begin() + static_cast<std::ptrdiff_t>(energies.size() / 2);
  std::nth_element(energies.begin(), mid, energies.end());
  // |noise projection|^2 is exponential; its median is ln 2 times its mean.
  const double floor_bin = *mid / std::numbers::ln2;

  std::vector<SnrParts> out(n_ports_wanted);
  for (std::size_t i = 0; i < n_ports_wanted; ++i) {
    double est_e = 0.0, raw_e = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      est_e += std::norm(fit.est[i][k]);
      raw_e += std::norm(fit.raw[i][k]);
    }
    est_e /= static_cast<double>(K);
    raw_e /= static_cast<double>(K);
    double gain = 0.0;
    for (std::size_t j = 0; j < M; ++j)
      gain += std::norm(fit.unmix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out[i].signal = std::max(est_e - floor_bin * gain, 0.0);
    out[i].raw_energy = raw_e;
    out[i].floor_bin = floor_bin;
  }
  return out;
}

SnrReport make_report(double signal, double raw_energy, double floor_bin, std::size_t group_size) {
  SnrReport r;
  const double noise_per_snapshot = floor_bin * static_cast<double>(group_size);
  if (noise_per_snapshot <= signal * 1e-20) {
    r.snapshot_snr_db = kSnrCapDb;
  } else {
    r.snapshot_snr_db = to_db(signal / noise_per_snapshot);
  }
  if (floor_bin <= raw_energy * 1e-20) {
    r.bin_ratio_db = kSnrCapDb;
  } else {
    r.bin_ratio_db = to_db(raw_energy / floor_bin);
  }
  return r;
}

}  // namespace

NyquistReport nyquist_check(const WaveformConfig& config, std::span<const ClockScheme> schemes) {
  NyquistReport rep;
  rep.bound_hz = 0.5 / config.frame_period_s;
  for (const auto& s : schemes) rep.highest_read_hz = std::max(rep.highest_read_hz, s.read_freq_port2());
  rep.ok = rep.highest_read_hz <= rep.bound_hz;
  return rep;
}

NyquistReport nyquist_check(const WaveformConfig& config, const ClockScheme& scheme) {
  return nyquist_check(config, std::span<const ClockScheme>(&scheme, 1));
}

double aliased_frequency(double f_hz, double period_s) {
  const double fs = 1.0 / period_s;
  double r = std::fmod(std::abs(f_hz), fs);
  if (r > 0.5 * fs) r = fs - r;
  return r;
}

double cycles_per_group(const WaveformConfig& config, double read_freq, std::size_t group_size) {
  return static_cast<double>(group_size) * config.frame_period_s * read_freq;
}

namespace {
bool integral(double x) { return std::abs(x - std::round(x)) < 1e-6; }
}  // namespace

std::size_t auto_group_size(const WaveformConfig& config, std::span<const double> read_freqs,
                            std::size_t cap) {
  for (std::size_t n = 1; n <= cap; ++n) {
    bool ok = true;
    for (double f : read_freqs)
      if (!integral(cycles_per_group(config, f, n))) {
        ok = false;
        break;
      }
    if (ok) return n;
  }
  throw std::invalid_argument("no group size up to the cap gives integral cycles for every read frequency");
}

std::vector<double> trace_read_frequencies(const ChannelTrace& trace) {
  std::vector<double> out;
  for (const auto& s : trace.sensors) {
    out.push_back(s.scheme.read_freq_port1());
    out.push_back(s.scheme.read_freq_port2());
  }
  return out;
}

GroupingSpec make_grouping(const WaveformConfig& config, std::span<const double> read_freqs,
                           std::size_t group_size) {
  if (group_size == 0 || group_size > config.n_snapshots)
    throw std::invalid_argument("group size must lie in [1, N]");
  for (double f : read_freqs) {
    const double c = cycles_per_group(config, f, group_size);
    if (!integral(c)) {
      std::ostringstream os;
      os << "group size " << group_size << " holds " << c << " cycles of " << f
         << " Hz; a whole number is required";
      throw std::invalid_argument(os.str());
    }
  }
  return GroupingSpec{group_size};
}

std::size_t group_count(const ChannelTrace& trace, const GroupingSpec& spec) {
  return spec.group_size == 0 ? 0 : trace.n_snapshots() / spec.group_size;
}

HarmonicVector project_harmonic(const ChannelTrace& trace, double read_freq, std::size_t group,
                                const GroupingSpec& spec) {
  check_group(trace, group, spec);
  const auto& cfg = trace.config;
  const std::size_t K = cfg.n_subcarriers;
  HarmonicVector out{std::vector<cdouble>(K, cdouble{}), read_freq, group};
  const std::size_t n0 = group * spec.group_size;
  for (std::size_t n = n0; n < n0 + spec.group_size; ++n) {
    const cdouble w = phasor(read_freq, cfg.frame_period_s, n);
    const cdouble* row = trace.data.data() + n * K;
    for (std::size_t k = 0; k < K; ++k) out.values[k] += row[k] * w;
  }
  for (auto& v : out.values) v /= static_cast<double>(spec.group_size);
  return out;
}

std::array<std::vector<cdouble>, 2> port_estimates(const ChannelTrace& trace,
                                                   const ClockScheme& scheme, std::size_t group,
                                                   const GroupingSpec& spec,
                                                   const DecodeOptions& opts) {
  const auto ports = ports_for(trace, scheme);
  auto fit = fit_group(trace, ports, group, spec, opts.demix);
  return {std::move(fit.est[0]), std::move(fit.est[1])};
}

PhaseSeries group_phases(const ChannelTrace& trace, const ClockScheme& scheme,
                         const GroupingSpec& spec, const DecodeOptions& opts) {
  const std::size_t G = group_count(trace, spec);
  if (G < 2) throw std::invalid_argument("phase decoding needs at least two groups");
  const auto ports = ports_for(trace, scheme);
  const std::size_t K = trace.n_subcarriers();

  PhaseSeries out;
  out.n_groups = G;
  out.group_duration_s = static_cast<double>(spec.group_size) * trace.config.frame_period_s;
  out.dphi[0].resize(G - 1);
  out.dphi[1].resize(G - 1);
  out.ambiguous_step.assign(G - 1, false);

  std::vector<GroupFit> fits;
  fits.reserve(G);
  for (std::size_t g = 0; g < G; ++g) fits.push_back(fit_group(trace, ports, g, spec, opts.demix));

  for (std::size_t g = 0; g + 1 < G; ++g) {
    for (std::size_t port = 0; port < 2; ++port) {
      // P~[k] = P[k, g+1] conj(P[k, g]); complex mean over k, then angle.
      cdouble sum{};
      for (std::size_t k = 0; k < K; ++k) sum += fits[g + 1].est[port][k] * std::conj(fits[g].est[port][k]);
      // The trace carries e^{-j phi}, so the product rotates by -(phi_{g+1} - phi_g).
      const double d = -std::arg(sum);
      out.dphi[port][g] = d;
      if (std::abs(d) > opts.slew_limit_rad) out.ambiguous_step[g] = true;
    }
  }
  return out;
}

PhaseSeries anchor(PhaseSeries series, const PortPhases& no_touch) {
  const double start[2] = {no_touch.phi1, no_touch.phi2};
  for (std::size_t port = 0; port < 2; ++port) {
    auto& cum = series.cumulative[port];
    cum.assign(series.n_groups, 0.0);
    if (series.n_groups == 0) continue;
    cum[0] = start[port];
    for (std::size_t g = 1; g < series.n_groups; ++g) cum[g] = cum[g - 1] + series.dphi[port][g - 1];
  }
  return series;
}

SnrReport read_sensor_snr(const ChannelTrace& trace, double read_freq, const GroupingSpec& spec) {
  const ClockScheme* match = nullptr;
  std::size_t port = 0;
  for (const auto& s : trace.sensors) {
    if (same_freq(s.scheme.read_freq_port1(), read_freq)) {
      match = &s.scheme;
      port = 0;
      break;
    }
    if (same_freq(s.scheme.read_freq_port2(), read_freq)) {
      match = &s.scheme;
      port = 1;
      break;
    }
  }
  if (!match) throw std::invalid_argument("read frequency does not belong to any sensor in the trace");
  const auto ports = ports_for(trace, *match);
  const std::size_t G = group_count(trace, spec);
  if (G == 0) throw std::invalid_argument("trace shorter than one group");
  double sig = 0.0, raw = 0.0, floor = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    const auto parts = snr_parts(trace, ports, g, spec, 2);
    sig += parts[port].signal;
    raw += parts[port].raw_energy;
    floor += parts[port].floor_bin;
  }
  return make_report(sig, raw, floor, spec.group_size);
}

std::array<std::vector<SnrReport>, 2> group_snr(const ChannelTrace& trace,
                                                const ClockScheme& scheme,
                                                const GroupingSpec& spec) {
  const auto ports = ports_for(trace, scheme);
  const std::size_t G = group_count(trace, spec);
  std::array<std::vector<SnrReport>, 2> out;
  for (std::size_t g = 0; g < G; ++g) {
    const auto parts = snr_parts(trace, ports, g, spec, 2);
    for (std::size_t p = 0; p < 2; ++p)
      out[p].push_back(make_report(parts[p].signal, parts[p].raw_energy, parts[p].floor_bin, spec.group_size));
  }
  return out;
}

}  // namespace bsforce
