#include "bsforce/traceio.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bsforce/serialize.hpp"

namespace bsforce {

namespace {

constexpr const char* kCreator = "bsforce 0.1.0";
constexpr std::size_t kMaxHeaderBytes = 1 << 20;

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string trace_header_json(const ChannelTrace& trace) {
  json sensors = json::array();
  for (const auto& s : trace.sensors)
    sensors.push_back(json{{"scheme", scheme_to_json(s.scheme)},
                           {"no_touch_rad", json::array({s.no_touch.phi1, s.no_touch.phi2})}});
  json h{{"format", "WFTRACE1"},
         {"waveform", waveform_to_json(trace.config)},
         {"sensors", sensors},
         {"reference_amplitude", trace.reference_amplitude},
         {"seed", trace.provenance.seed},
         {"config_digest", hex64(trace.provenance.config_digest)},
         {"creator", kCreator}};
  return h.dump();
}

void write_trace(const ChannelTrace& trace, const std::filesystem::path& path) {
  trace.validate();
  std::string bytes(kTraceMagic, kTraceMagic + 8);
  bytes += trace_header_json(trace);
  bytes.push_back('\n');
  bytes.reserve(bytes.size() + trace.data.size() * 8);
  for (const auto& v : trace.data) {
    put_f32(bytes, static_cast<float>(v.real()));
    put_f32(bytes, static_cast<float>(v.imag()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

ChannelTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 8 || std::memcmp(bytes.data(), kTraceMagic, 8) != 0) throw TraceFormatError("bad magic");
  const auto nl = bytes.find('\n', 8);
  if (nl == std::string::npos || nl - 8 > kMaxHeaderBytes) throw TraceFormatError("truncated header");

  json h;
  try {
    h = json::parse(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(nl));
  } catch (const json::exception& e) {
    throw TraceFormatError(std::string("header is not valid JSON: ") + e.what());
  }

  ChannelTrace trace;
  try {
    check_keys(h, {"format", "waveform", "sensors", "reference_amplitude", "seed", "config_digest", "creator"},
               "trace header");
    if (h.value("format", "") != "WFTRACE1") throw TraceFormatError("header format tag mismatch");
    trace.config = waveform_from_json(h.at("waveform"));
    for (const auto& s : h.at("sensors")) {
      check_keys(s, {"scheme", "no_touch_rad"}, "trace header sensor");
      const auto nt = s.at("no_touch_rad").get<std::vector<double>>();
      if (nt.size() != 2) throw TraceFormatError("sensor no_touch_rad must hold two phases");
      trace.sensors.push_back(SensorInfo{scheme_from_json(s.at("scheme"), "trace header sensor"),
                                         PortPhases{nt[0], nt[1], trace.config.carrier_hz}});
    }
    trace.reference_amplitude = h.at("reference_amplitude").get<double>();
    trace.provenance.seed = h.at("seed").get<std::uint64_t>();
    trace.provenance.config_digest = std::stoull(h.at("config_digest").get<std::string>(), nullptr, 16);
  } catch (const ConfigError& e) {
    throw TraceFormatError(std::string("bad header: ") + e.what());
  } catch (const json::exception& e) {
    throw TraceFormatError(std::string("bad header: ") + e.what());
  } catch (const std::logic_error& e) {
    throw TraceFormatError(std::string("bad header: ") + e.what());
  }

  const std::size_t count = trace.config.n_subcarriers * trace.config.n_snapshots;
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload < count * 8) throw TraceFormatError("truncated payload");
  if (payload > count * 8) throw TraceFormatError("dimension mismatch: payload longer than K x N");

  trace.data.resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + nl + 1;
  for (std::size_t i = 0; i < count; ++i, p += 8)
    trace.data[i] = cdouble{static_cast<double>(get_f32(p)), static_cast<double>(get_f32(p + 4))};
  return trace;
}

void write_phase_csv(std::ostream& os, const PhaseSeries& series,
                     const std::array<std::vector<SnrReport>, 2>& snr,
                     const std::vector<Estimate>* estimates) {
  const double deg = 180.0 / std::numbers::pi;
  os << "group_index,t_seconds,dphi1_deg,dphi2_deg,phi1_deg,phi2_deg,snr1_db,snr2_db";
  if (estimates) os << ",force_n,location_mm,residual";
  os << '\n';
  for (std::size_t g = 0; g < series.n_groups; ++g) {
    const double d1 = g == 0 ? 0.0 : series.dphi[0][g - 1];
    const double d2 = g == 0 ? 0.0 : series.dphi[1][g - 1];
    const double p1 = series.anchored() ? series.cumulative[0][g] : 0.0;
    const double p2 = series.anchored() ? series.cumulative[1][g] : 0.0;
    os << g << ',' << format_number(static_cast<double>(g) * series.group_duration_s) << ','
       << format_number(d1 * deg) << ',' << format_number(d2 * deg) << ',' << format_number(p1 * deg) << ','
       << format_number(p2 * deg) << ',';
    os << (g < snr[0].size() ? format_number(snr[0][g].snapshot_snr_db) : std::string("nan")) << ',';
    os << (g < snr[1].size() ? format_number(snr[1][g].snapshot_snr_db) : std::string("nan"));
    if (estimates) {
      const auto& e = (*estimates)[g];
      os << ',' << format_number(e.force_n) << ',' << format_number(e.location_mm) << ','
         << format_number(e.residual);
    }
    os << '\n';
  }
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

void save_model(const SensorModel& model, const std::filesystem::path& path) {
  write_json_file(model_to_json(model), path);
}

SensorModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

void save_dataset(const CalibrationDataset& data, const std::filesystem::path& path) {
  write_json_file(dataset_to_json(data), path);
}

CalibrationDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}

}  // namespace bsforce
