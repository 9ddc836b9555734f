#pragma once

// Persistence for traces, phase series, calibration datasets and sensor
// models.
//
// Trace file layout:
//   bytes 0..7   "WFTRACE1"
//   header       one UTF-8 JSON object terminated by '\n'
//   payload      N*K pairs of little-endian IEEE-754 float32 (re, im),
//                snapshot-major: n outer, k inner
//
// The payload is float32, so write_trace rounds double-valued traces; traces
// whose entries are float32-representable round-trip bit-exactly.

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsforce/calib.hpp"
#include "bsforce/chansim.hpp"
#include "bsforce/decoder.hpp"

namespace bsforce {

inline constexpr char kTraceMagic[8] = {'W', 'F', 'T', 'R', 'A', 'C', 'E', '1'};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_trace(const ChannelTrace& trace, const std::filesystem::path& path);
ChannelTrace read_trace(const std::filesystem::path& path);

/// Header object as written by write_trace.
std::string trace_header_json(const ChannelTrace& trace);

/// One row per group; estimates are appended as extra columns when present.
void write_phase_csv(std::ostream& os, const PhaseSeries& series,
                     const std::array<std::vector<SnrReport>, 2>& snr,
                     const std::vector<Estimate>* estimates = nullptr);

void save_model(const SensorModel& model, const std::filesystem::path& path);
SensorModel load_model(const std::filesystem::path& path);

void save_dataset(const CalibrationDataset& data, const std::filesystem::path& path);
CalibrationDataset load_dataset(const std::filesystem::path& path);

/// Locale-independent shortest round-trip rendering of a double.
std::string format_number(double v);

}  // namespace bsforce
