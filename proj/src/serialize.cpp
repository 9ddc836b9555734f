#include "bsforce/serialize.hpp"

#include <algorithm>
#include <cstring>

namespace bsforce {

namespace {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

// Library validation failures inside a config section become ConfigError.
template <typename F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json complex_to_json(cdouble z) { return json::array({z.real(), z.imag()}); }

cdouble complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(where + ": amplitude must be a number or [re, im]");
}

}  // namespace

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

json clock_to_json(const SwitchClock& c) {
  return json{{"freq", c.frequency}, {"duty", c.duty}, {"offset", c.phase_offset}};
}

SwitchClock clock_from_json(const json& j, const std::string& where) {
  check_keys(j, {"freq", "duty", "offset"}, where);
  return guarded(where, [&] {
    return make_clock(get<double>(j, "freq", where), get<double>(j, "duty", where),
                      get_or<double>(j, "offset", 0.0, where));
  });
}

json scheme_to_json(const ClockScheme& s) {
  return json{{"f_s_hz", s.fs()}, {"clock_a", clock_to_json(s.clock_a)}, {"clock_b", clock_to_json(s.clock_b)}};
}

ClockScheme scheme_from_json(const json& j, const std::string& where) {
  check_keys(j, {"f_s_hz", "clock_a", "clock_b"}, where);
  const bool has_a = j.contains("clock_a"), has_b = j.contains("clock_b");
  if (has_a != has_b) throw ConfigError(where + ": clock_a and clock_b must be given together");
  if (!has_a) return guarded(where, [&] { return preset_scheme(get<double>(j, "f_s_hz", where)); });
  auto a = clock_from_json(j["clock_a"], where + ".clock_a");
  auto b = clock_from_json(j["clock_b"], where + ".clock_b");
  auto s = guarded(where, [&] { return make_scheme(a, b); });
  if (j.contains("f_s_hz") && get<double>(j, "f_s_hz", where) != s.fs())
    throw ConfigError(where + ": f_s_hz disagrees with clock_a.freq");
  return s;
}

json waveform_to_json(const WaveformConfig& w) {
  return json{{"n_subcarriers", w.n_subcarriers},
              {"subcarrier_spacing_hz", w.subcarrier_spacing_hz},
              {"frame_period_s", w.frame_period_s},
              {"carrier_hz", w.carrier_hz},
              {"n_snapshots", w.n_snapshots}};
}

WaveformConfig waveform_from_json(const json& j) {
  const std::string where = "waveform";
  check_keys(j, {"n_subcarriers", "subcarrier_spacing_hz", "frame_period_s", "carrier_hz", "n_snapshots"}, where);
  WaveformConfig w;
  w.n_subcarriers = get_or<std::size_t>(j, "n_subcarriers", w.n_subcarriers, where);
  w.subcarrier_spacing_hz = get_or<double>(j, "subcarrier_spacing_hz", w.subcarrier_spacing_hz, where);
  w.frame_period_s = get_or<double>(j, "frame_period_s", w.frame_period_s, where);
  w.carrier_hz = get_or<double>(j, "carrier_hz", w.carrier_hz, where);
  w.n_snapshots = get_or<std::size_t>(j, "n_snapshots", w.n_snapshots, where);
  guarded(where, [&] {
    w.validate();
    return 0;
  });
  return w;
}

json geometry_to_json(const SensorGeometry& g) {
  return json{{"length_mm", g.length_mm},
              {"signal_width_mm", g.signal_width_mm},
              {"ground_width_mm", g.ground_width_mm},
              {"height_mm", g.height_mm},
              {"eps_eff", g.eps_eff}};
}

SensorGeometry geometry_from_json(const json& j, const std::string& where) {
  check_keys(j, {"length_mm", "signal_width_mm", "ground_width_mm", "height_mm", "eps_eff"}, where);
  SensorGeometry g;
  g.length_mm = get_or<double>(j, "length_mm", g.length_mm, where);
  g.signal_width_mm = get_or<double>(j, "signal_width_mm", g.signal_width_mm, where);
  g.ground_width_mm = get_or<double>(j, "ground_width_mm", g.ground_width_mm, where);
  g.height_mm = get_or<double>(j, "height_mm", g.height_mm, where);
  g.eps_eff = get_or<double>(j, "eps_eff", g.eps_eff, where);
  guarded(where, [&] {
    g.validate();
    return 0;
  });
  return g;
}

json mechanics_to_json(const MechanicalParams& m) {
  return json{{"contact_threshold_n", m.contact_threshold_n},
              {"force_scale_n", m.force_scale_n},
              {"max_halfwidth_mm", m.max_halfwidth_mm},
              {"asymmetry_exponent", m.asymmetry_exponent}};
}

MechanicalParams mechanics_from_json(const json& j, const std::string& where) {
  check_keys(j, {"contact_threshold_n", "force_scale_n", "max_halfwidth_mm", "asymmetry_exponent"}, where);
  MechanicalParams m;
  m.contact_threshold_n = get_or<double>(j, "contact_threshold_n", m.contact_threshold_n, where);
  m.force_scale_n = get_or<double>(j, "force_scale_n", m.force_scale_n, where);
  m.max_halfwidth_mm = get_or<double>(j, "max_halfwidth_mm", m.max_halfwidth_mm, where);
  m.asymmetry_exponent = get_or<double>(j, "asymmetry_exponent", m.asymmetry_exponent, where);
  return m;
}

json path_to_json(const PathTerm& p) {
  return json{{"amplitude", complex_to_json(p.amplitude)}, {"distance_m", p.distance_m}};
}

PathTerm path_from_json(const json& j, const std::string& where) {
  check_keys(j, {"amplitude", "distance_m"}, where);
  if (!j.contains("amplitude")) throw ConfigError(where + ": missing key 'amplitude'");
  PathTerm p{complex_from_json(j["amplitude"], where), get<double>(j, "distance_m", where)};
  if (!(p.distance_m >= 0.0)) throw ConfigError(where + ": distance_m must be >= 0");
  if (!std::isfinite(p.amplitude.real()) || !std::isfinite(p.amplitude.imag()))
    throw ConfigError(where + ": amplitude must be finite");
  return p;
}

json timeline_to_json(const TouchTimeline& t) {
  json arr = json::array();
  for (const auto& e : t.entries()) {
    json touch = nullptr;
    if (e.touch) touch = json{{"force_n", e.touch->force_n}, {"location_mm", e.touch->location_mm}};
    arr.push_back(json{{"start_snapshot", e.start_snapshot}, {"touch", touch}});
  }
  return arr;
}

TouchTimeline timeline_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<TimelineEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string w = where + "[" + std::to_string(i) + "]";
    check_keys(e, {"start_snapshot", "touch"}, w);
    TimelineEntry te;
    te.start_snapshot = get<std::size_t>(e, "start_snapshot", w);
    if (e.contains("touch") && !e["touch"].is_null()) {
      check_keys(e["touch"], {"force_n", "location_mm"}, w + ".touch");
      te.touch = Touch{get<double>(e["touch"], "force_n", w + ".touch"),
                       get<double>(e["touch"], "location_mm", w + ".touch")};
      if (!(te.touch->force_n >= 0.0)) throw ConfigError(w + ": force_n must be >= 0");
    }
    entries.push_back(te);
  }
  return guarded(where, [&] { return TouchTimeline(std::move(entries)); });
}

json noise_to_json(const NoiseSpec& n) {
  json j{{"seed", n.seed}};
  j["snr_db"] = n.snr_db ? json(*n.snr_db) : json(nullptr);
  j["quantize_bits"] = n.quantize_bits ? json(*n.quantize_bits) : json(nullptr);
  return j;
}

NoiseSpec noise_from_json(const json& j) {
  const std::string where = "noise";
  check_keys(j, {"snr_db", "seed", "quantize_bits"}, where);
  NoiseSpec n;
  if (j.contains("snr_db") && !j["snr_db"].is_null()) n.snr_db = get<double>(j, "snr_db", where);
  if (j.contains("seed")) n.seed = get<std::uint64_t>(j, "seed", where);
  if (j.contains("quantize_bits") && !j["quantize_bits"].is_null())
    n.quantize_bits = get<int>(j, "quantize_bits", where);
  guarded(where, [&] {
    n.validate();
    return 0;
  });
  return n;
}

json model_to_json(const SensorModel& m) {
  json locs = json::array(), per = json::array();
  for (const auto& f : m.fits) {
    locs.push_back(f.location_mm);
    json e{{"location_mm", f.location_mm}, {"rms_deg", f.rms_deg}};
    for (std::size_t i = 0; i < 4; ++i) {
      e["c" + std::to_string(i) + "_port1"] = f.port1[i];
      e["c" + std::to_string(i) + "_port2"] = f.port2[i];
    }
    per.push_back(e);
  }
  return json{{"carrier_hz", m.carrier_hz},
              {"locations_mm", locs},
              {"per_location", per},
              {"force_range_n", json::array({m.force_min_n, m.force_max_n})},
              {"no_touch_rad", json::array({m.no_touch.phi1, m.no_touch.phi2})}};
}

SensorModel model_from_json(const json& j) {
  const std::string where = "model";
  check_keys(j, {"carrier_hz", "locations_mm", "per_location", "force_range_n", "no_touch_rad"}, where);
  SensorModel m;
  m.carrier_hz = get<double>(j, "carrier_hz", where);
  const auto locs = get<std::vector<double>>(j, "locations_mm", where);
  const auto range = get<std::vector<double>>(j, "force_range_n", where);
  if (range.size() != 2 || !(range[0] <= range[1])) throw ConfigError(where + ": bad force_range_n");
  m.force_min_n = range[0];
  m.force_max_n = range[1];
  const auto nt = get_or<std::vector<double>>(j, "no_touch_rad", {0.0, 0.0}, where);
  if (nt.size() != 2) throw ConfigError(where + ": no_touch_rad must hold two phases");
  m.no_touch = PortPhases{nt[0], nt[1], m.carrier_hz};
  if (!j.contains("per_location") || !j["per_location"].is_array() || j["per_location"].size() != locs.size())
    throw ConfigError(where + ": per_location must align with locations_mm");
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const auto& e = j["per_location"][i];
    const std::string w = where + ".per_location[" + std::to_string(i) + "]";
    check_keys(e, {"location_mm", "rms_deg", "c0_port1", "c1_port1", "c2_port1", "c3_port1", "c0_port2",
                   "c1_port2", "c2_port2", "c3_port2"},
               w);
    LocationFit f;
    f.location_mm = locs[i];
    if (e.contains("location_mm") && get<double>(e, "location_mm", w) != locs[i])
      throw ConfigError(w + ": location_mm disagrees with locations_mm");
    f.rms_deg = get_or<double>(e, "rms_deg", 0.0, w);
    for (std::size_t c = 0; c < 4; ++c) {
      f.port1[c] = get<double>(e, ("c" + std::to_string(c) + "_port1").c_str(), w);
      f.port2[c] = get<double>(e, ("c" + std::to_string(c) + "_port2").c_str(), w);
    }
    if (!m.fits.empty() && !(f.location_mm > m.fits.back().location_mm))
      throw ConfigError(where + ": locations_mm must be strictly increasing");
    m.fits.push_back(f);
  }
  if (m.fits.size() < 2) throw ConfigError(where + ": at least two locations are required");
  return m;
}

json dataset_to_json(const CalibrationDataset& d) {
  json samples = json::array();
  for (const auto& s : d.samples) samples.push_back(json::array({s.force_n, s.location_mm, s.phi1, s.phi2}));
  return json{{"carrier_hz", d.carrier_hz},
              {"source", d.source == DatasetSource::simulated ? "simulated" : "imported"},
              {"no_touch_rad", json::array({d.no_touch.phi1, d.no_touch.phi2})},
              {"columns", json::array({"force_n", "location_mm", "phi1_rad", "phi2_rad"})},
              {"samples", samples}};
}

CalibrationDataset dataset_from_json(const json& j) {
  const std::string where = "dataset";
  check_keys(j, {"carrier_hz", "source", "no_touch_rad", "columns", "samples"}, where);
  CalibrationDataset d;
  d.carrier_hz = get<double>(j, "carrier_hz", where);
  const auto src = get_or<std::string>(j, "source", "imported", where);
  if (src != "simulated" && src != "imported") throw ConfigError(where + ": unknown source '" + src + "'");
  d.source = src == "simulated" ? DatasetSource::simulated : DatasetSource::imported;
  const auto nt = get<std::vector<double>>(j, "no_touch_rad", where);
  if (nt.size() != 2) throw ConfigError(where + ": no_touch_rad must hold two phases");
  d.no_touch = PortPhases{nt[0], nt[1], d.carrier_hz};
  for (const auto& row : get<std::vector<std::vector<double>>>(j, "samples", where)) {
    if (row.size() != 4) throw ConfigError(where + ": each sample needs four values");
    d.samples.push_back(CalibrationSample{row[0], row[1], row[2], row[3]});
  }
  guarded(where, [&] {
    d.validate();
    return 0;
  });
  return d;
}

}  // namespace bsforce
