#pragma once

// Reader-side decoding: harmonic projection of channel snapshots at the
// read frequencies (the sensor's artificial Doppler bins), phase-group
// conjugate multiplication, complex subcarrier averaging and anchoring to
// the no-touch phase.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "bsforce/chansim.hpp"
#include "bsforce/clocks.hpp"
#include "bsforce/transducer.hpp"

namespace bsforce {

struct NyquistReport {
  bool ok = true;
  double bound_hz = 0.0;        // 1 / (2T)
  double highest_read_hz = 0.0;
};

NyquistReport nyquist_check(const WaveformConfig& config, const ClockScheme& scheme);
NyquistReport nyquist_check(const WaveformConfig& config, std::span<const ClockScheme> schemes);

/// Frequency at which a tone at f appears after sampling every T seconds,
/// folded into [0, 1/(2T)].
double aliased_frequency(double f_hz, double period_s);

struct GroupingSpec {
  std::size_t group_size = 625;
};

/// Cycles of read_freq inside one group.
double cycles_per_group(const WaveformConfig& config, double read_freq, std::size_t group_size);

/// Smallest group size making every read frequency complete a whole number
/// of cycles per group. Throws std::invalid_argument if none exists up to cap.
std::size_t auto_group_size(const WaveformConfig& config, std::span<const double> read_freqs,
                            std::size_t cap = 100000);

/// Read frequencies of every port of every sensor recorded in the trace.
std::vector<double> trace_read_frequencies(const ChannelTrace& trace);

/// Checks group_size <= N and integral cycles for every read frequency.
GroupingSpec make_grouping(const WaveformConfig& config, std::span<const double> read_freqs,
                           std::size_t group_size);

std::size_t group_count(const ChannelTrace& trace, const GroupingSpec& spec);

struct HarmonicVector {
  std::vector<cdouble> values;  // one per subcarrier
  double read_freq = 0.0;
  std::size_t group_index = 0;
};

/// P[k] = (1/N_g) sum_{n in group} H[k, n] e^{-j 2 pi f n T}, n absolute.
HarmonicVector project_harmonic(const ChannelTrace& trace, double read_freq, std::size_t group,
                                const GroupingSpec& spec);

struct DecodeOptions {
  // Undo the cross-port leakage of sampled square waves using the known
  // switch sequences of every sensor in the trace.
  bool demix = true;
  // Group steps larger than this are flagged as possibly wrapped.
  double slew_limit_rad = 0.9 * std::numbers::pi;
};

struct PhaseSeries {
  std::size_t n_groups = 0;
  double group_duration_s = 0.0;
  std::array<std::vector<double>, 2> dphi;        // [port][g] change from group g to g+1
  std::array<std::vector<double>, 2> cumulative;  // [port][g], filled by anchor()
  std::vector<bool> ambiguous_step;               // |dphi| beyond slew limit, either port

  bool anchored() const { return !cumulative[0].empty(); }
};

/// Per-group demixed port estimates alpha_s e^{-j2pi kF d_s/c} e^{-j phi}
/// for both ports of `scheme`: result[port][k].
std::array<std::vector<cdouble>, 2> port_estimates(const ChannelTrace& trace,
                                                   const ClockScheme& scheme, std::size_t group,
                                                   const GroupingSpec& spec,
                                                   const DecodeOptions& opts = {});

/// Group-to-group phase changes for both ports of `scheme`. Throws if the
/// trace holds fewer than two groups.
PhaseSeries group_phases(const ChannelTrace& trace, const ClockScheme& scheme,
                         const GroupingSpec& spec, const DecodeOptions& opts = {});

/// Cumulative phases starting from the no-touch phase at group 0.
PhaseSeries anchor(PhaseSeries series, const PortPhases& no_touch);

struct SnrReport {
  double snapshot_snr_db = 0.0;  // sensor power over per-snapshot noise, comparable to NoiseSpec
  double bin_ratio_db = 0.0;     // read-bin energy over the off-harmonic floor
};

inline constexpr double kSnrCapDb = 200.0;

/// SNR of the port read at read_freq, pooled over all groups. The noise
/// floor is the median off-harmonic projection energy of the residual left
/// after removing the fitted sensor terms.
SnrReport read_sensor_snr(const ChannelTrace& trace, double read_freq, const GroupingSpec& spec);

/// Per-group SNR for both ports of `scheme`: result[port][g].
std::array<std::vector<SnrReport>, 2> group_snr(const ChannelTrace& trace,
                                                const ClockScheme& scheme,
                                                const GroupingSpec& spec);

}  // namespace bsforce
