#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <limits>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "bsforce/serialize.hpp"
#include "bsforce/traceio.hpp"

using namespace bsforce;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bsforce_test_traceio";
  fs::create_directories(dir);
  return dir / name;
}

ChannelTrace sample_trace(std::size_t K, std::size_t N, std::uint64_t seed) {
  WaveformConfig cfg;
  cfg.n_subcarriers = K;
  cfg.n_snapshots = N;
  auto tr = synthesize_clean(cfg, preset_scheme(1000.0), TouchTimeline{}, MultipathProfile{{{{3.0, 1.0}, 0.4}}, {{1, 0}, 2}}, {}, {});
  NoiseSpec n;
  n.snr_db = 10.0;
  n.seed = seed;
  apply_noise(tr, n);
  for (auto& v : tr.data) v = cdouble(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  return tr;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("file size follows the layout") {
  const auto tr = sample_trace(64, 625, 1);
  const auto path = temp_file("layout.wft");
  write_trace(tr, path);
  const auto header = trace_header_json(tr);
  CHECK(fs::file_size(path) == 8 + header.size() + 1 + 64 * 625 * 8);
  const auto bytes = slurp(path);
  CHECK(bytes.substr(0, 8) == "WFTRACE1");
  CHECK(bytes[8 + header.size()] == '\n');
}

TEST_CASE("round trip preserves data and metadata") {
  auto tr = sample_trace(8, 300, 2);
  tr.provenance.config_digest = 0xdeadbeefcafef00dULL;
  const auto path = temp_file("roundtrip.wft");
  write_trace(tr, path);
  const auto back = read_trace(path);
  CHECK(back.data == tr.data);
  CHECK(back.config.n_subcarriers == 8);
  CHECK(back.config.n_snapshots == 300);
  CHECK(back.config.frame_period_s == tr.config.frame_period_s);
  CHECK(back.config.subcarrier_spacing_hz == tr.config.subcarrier_spacing_hz);
  CHECK(back.config.carrier_hz == tr.config.carrier_hz);
  REQUIRE(back.sensors.size() == 1);
  CHECK(back.sensors[0].scheme.clock_b.phase_offset == 0.5);
  CHECK(back.sensors[0].no_touch.phi1 == tr.sensors[0].no_touch.phi1);
  CHECK(back.reference_amplitude == tr.reference_amplitude);
  CHECK(back.provenance.seed == 2);
  CHECK(back.provenance.config_digest == 0xdeadbeefcafef00dULL);
}

TEST_CASE("bit-exact special float values") {
  auto tr = sample_trace(4, 10, 3);
  const float specials[] = {0.0f, -0.0f, std::numeric_limits<float>::denorm_min(), -std::numeric_limits<float>::denorm_min(),
                            std::bit_cast<float>(0x007fffffu), std::numeric_limits<float>::max(),
                            std::numeric_limits<float>::lowest(), std::numeric_limits<float>::min()};
  for (std::size_t i = 0; i < std::size(specials); ++i) tr.data[i] = cdouble(specials[i], specials[std::size(specials) - 1 - i]);
  const auto path = temp_file("special.wft");
  write_trace(tr, path);
  const auto back = read_trace(path);
  for (std::size_t i = 0; i < tr.data.size(); ++i) {
    CHECK(std::bit_cast<std::uint32_t>(static_cast<float>(back.data[i].real())) ==
          std::bit_cast<std::uint32_t>(static_cast<float>(tr.data[i].real())));
    CHECK(std::bit_cast<std::uint32_t>(static_cast<float>(back.data[i].imag())) ==
          std::bit_cast<std::uint32_t>(static_cast<float>(tr.data[i].imag())));
  }
}

TEST_CASE("corrupted files are rejected") {
  const auto tr = sample_trace(4, 50, 4);
  const auto path = temp_file("corrupt.wft");
  write_trace(tr, path);
  const auto good = slurp(path);

  auto bad = good;
  bad[0] = 'X';
  spit(path, bad);
  CHECK_THROWS_WITH_AS(read_trace(path), "bad magic", TraceFormatError);

  spit(path, good.substr(0, good.size() - 5));
  CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains("truncated"), TraceFormatError);

  spit(path, good + std::string(8, '\0'));
  CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains("dimension mismatch"), TraceFormatError);

  spit(path, good.substr(0, 20));
  CHECK_THROWS_WITH_AS(read_trace(path), doctest::Contains("truncated"), TraceFormatError);

  spit(path, "WF");
  CHECK_THROWS_WITH_AS(read_trace(path), "bad magic", TraceFormatError);

  // Header that lies about N.
  const auto nl = good.find('\n');
  auto h = json::parse(good.substr(8, nl - 8));
  h["waveform"]["n_snapshots"] = 0;
  spit(path, std::string("WFTRACE1") + h.dump() + "\n");
  CHECK_THROWS_AS(read_trace(path), TraceFormatError);

  h = json::parse(good.substr(8, nl - 8));
  h["extra"] = 1;
  spit(path, std::string("WFTRACE1") + h.dump() + "\n" + good.substr(nl + 1));
  CHECK_THROWS_AS(read_trace(path), TraceFormatError);

  CHECK_THROWS(read_trace(temp_file("does_not_exist.wft")));
}

TEST_CASE("empty traces cannot be written") {
  ChannelTrace tr;
  tr.config.n_snapshots = 0;
  CHECK_THROWS_AS(write_trace(tr, temp_file("empty.wft")), std::invalid_argument);
}

TEST_CASE("phase CSV columns") {
  PhaseSeries s;
  s.n_groups = 3;
  s.group_duration_s = 0.036;
  s.dphi[0] = {0.1, -0.2};
  s.dphi[1] = {0.0, 0.3};
  s.ambiguous_step = {false, false};
  s = anchor(s, PortPhases{1.0, 2.0, 2.4e9});
  std::array<std::vector<SnrReport>, 2> snr;
  for (auto& port : snr) port.assign(3, SnrReport{25.0, 40.0});

  std::ostringstream plain;
  write_phase_csv(plain, s, snr);
  std::istringstream in(plain.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "group_index,t_seconds,dphi1_deg,dphi2_deg,phi1_deg,phi2_deg,snr1_db,snr2_db");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);

  std::vector<Estimate> est(3, Estimate{4.0, 40.0, 1e-6, true});
  std::ostringstream with;
  write_phase_csv(with, s, snr, &est);
  CHECK(with.str().rfind("group_index,t_seconds,dphi1_deg,dphi2_deg,phi1_deg,phi2_deg,snr1_db,snr2_db,force_n,location_mm,residual\n", 0) == 0);
}

TEST_CASE("model and dataset persistence") {
  std::vector<double> forces;
  for (double f = 1.0; f <= 8.0; f += 0.5) forces.push_back(f);
  const auto data = generate_sweep({20, 30, 40, 50, 60}, forces, {}, {}, 2.4e9);
  const auto model = fit_model(data);

  const auto mp = temp_file("model.json");
  save_model(model, mp);
  const auto m2 = load_model(mp);
  REQUIRE(m2.fits.size() == model.fits.size());
  for (std::size_t i = 0; i < model.fits.size(); ++i) {
    CHECK(m2.fits[i].location_mm == model.fits[i].location_mm);
    CHECK(m2.fits[i].port1 == model.fits[i].port1);
    CHECK(m2.fits[i].port2 == model.fits[i].port2);
  }
  CHECK(m2.force_min_n == 1.0);
  CHECK(m2.force_max_n == 8.0);
  CHECK(m2.no_touch.phi1 == model.no_touch.phi1);

  const auto dp = temp_file("dataset.json");
  save_dataset(data, dp);
  const auto d2 = load_dataset(dp);
  REQUIRE(d2.samples.size() == 75);
  for (std::size_t i = 0; i < 75; ++i) {
    CHECK(d2.samples[i].phi1 == data.samples[i].phi1);
    CHECK(d2.samples[i].force_n == data.samples[i].force_n);
  }

  spit(mp, "{not json");
  CHECK_THROWS_AS(load_model(mp), ConfigError);
}

TEST_CASE("format_number round-trips") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
}
