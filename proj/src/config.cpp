#include "bsforce/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bsforce/decoder.hpp"

namespace bsforce {

CalibrationSettings::CalibrationSettings() {
  for (int i = 0; i <= 14; ++i) forces_n.push_back(1.0 + 0.5 * i);
}

std::vector<ClockScheme> ExperimentConfig::schemes() const {
  std::vector<ClockScheme> out;
  for (const auto& s : sensors) out.push_back(s.scheme);
  return out;
}

void ExperimentConfig::validate() const {
  if (sensors.empty() || sensors.size() > 2) throw ConfigError("config must describe one or two sensors");
  try {
    waveform.validate();
    noise.validate();
    for (const auto& s : sensors) {
      s.geom.validate();
      s.mech.validate(s.geom);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  const auto sch = schemes();
  const auto nyq = nyquist_check(waveform, std::span<const ClockScheme>(sch));
  if (!nyq.ok) {
    std::ostringstream os;
    os << "read frequency " << nyq.highest_read_hz << " Hz exceeds the Nyquist bound " << nyq.bound_hz
       << " Hz (1/(2T) with T = " << waveform.frame_period_s << " s)";
    throw ConfigError(os.str());
  }
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto& tl = sensors[i].timeline;
    if (tl.entries().back().start_snapshot >= waveform.n_snapshots)
      throw ConfigError("timeline start snapshot beyond waveform.n_snapshots");
    for (const auto& e : tl.entries())
      if (e.touch && !(e.touch->location_mm >= 0.0 && e.touch->location_mm <= sensors[i].geom.length_mm))
        throw ConfigError("timeline touch location outside the sensor length");
  }
  if (sensors.size() == 2) {
    const double a[2] = {sch[0].read_freq_port1(), sch[0].read_freq_port2()};
    const double b[2] = {sch[1].read_freq_port1(), sch[1].read_freq_port2()};
    for (double x : a)
      for (double y : b)
        if (x == y) throw ConfigError("second sensor read frequency collides with the first sensor");
  }
  if (calibration.locations_mm.size() < 2) throw ConfigError("calibration needs at least two locations");
  if (sweep.trials == 0) throw ConfigError("sweep.trials must be positive");
  if (!(sweep.snr_step_db > 0.0) || sweep.snr_stop_db < sweep.snr_start_db)
    throw ConfigError("sweep SNR range is empty");
  if (sweep.test_locations_mm.empty()) throw ConfigError("sweep.test_locations_mm is empty");
  if (!(sweep.force_min_n <= sweep.force_max_n)) throw ConfigError("sweep force range is empty");
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.waveform = WaveformConfig{};
  SensorSetup s;
  s.scheme = preset_scheme(1000.0);
  s.path = PathTerm{{1.0, 0.0}, 2.0};
  s.timeline = TouchTimeline({TimelineEntry{0, std::nullopt}, TimelineEntry{2500, Touch{4.0, 40.0}},
                              TimelineEntry{5000, std::nullopt}});
  cfg.sensors.push_back(s);
  cfg.static_paths = {PathTerm{{100.0, 0.0}, 0.3}, PathTerm{{6.0, -8.0}, 4.0}, PathTerm{{-2.0, 2.0}, 7.5}};
  cfg.noise.snr_db = 25.0;
  cfg.noise.seed = 7;
  return cfg;
}

namespace {

SensorSetup sensor_from_json(const json& j, const SensorSetup& base, const std::string& where) {
  SensorSetup s = base;
  if (j.contains("clocks")) s.scheme = scheme_from_json(j["clocks"], where + ".clocks");
  if (j.contains("geometry")) s.geom = geometry_from_json(j["geometry"], where + ".geometry");
  if (j.contains("mechanics")) s.mech = mechanics_from_json(j["mechanics"], where + ".mechanics");
  if (j.contains("sensor_path")) s.path = path_from_json(j["sensor_path"], where + ".sensor_path");
  if (j.contains("timeline")) s.timeline = timeline_from_json(j["timeline"], where + ".timeline");
  return s;
}

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"waveform", "clocks", "geometry", "mechanics", "multipath", "noise", "timeline", "second_sensor",
                 "grouping", "calibration", "sweep"},
             "config");
  ExperimentConfig cfg = default_config();
  if (j.contains("waveform")) cfg.waveform = waveform_from_json(j["waveform"]);

  auto& primary = cfg.sensors.front();
  if (j.contains("clocks")) primary.scheme = scheme_from_json(j["clocks"], "clocks");
  if (j.contains("geometry")) primary.geom = geometry_from_json(j["geometry"], "geometry");
  if (j.contains("mechanics")) primary.mech = mechanics_from_json(j["mechanics"], "mechanics");
  if (j.contains("timeline")) primary.timeline = timeline_from_json(j["timeline"], "timeline");
  if (j.contains("multipath")) {
    const auto& mp = j["multipath"];
    check_keys(mp, {"paths", "sensor_path"}, "multipath");
    if (mp.contains("paths")) {
      if (!mp["paths"].is_array()) throw ConfigError("multipath.paths: expected an array");
      cfg.static_paths.clear();
      for (std::size_t i = 0; i < mp["paths"].size(); ++i)
        cfg.static_paths.push_back(path_from_json(mp["paths"][i], "multipath.paths[" + std::to_string(i) + "]"));
    }
    if (mp.contains("sensor_path")) primary.path = path_from_json(mp["sensor_path"], "multipath.sensor_path");
  }
  if (j.contains("noise")) cfg.noise = noise_from_json(j["noise"]);

  if (j.contains("second_sensor") && !j["second_sensor"].is_null()) {
    const auto& ss = j["second_sensor"];
    check_keys(ss, {"clocks", "geometry", "mechanics", "sensor_path", "timeline"}, "second_sensor");
    SensorSetup base = primary;
    base.scheme = preset_scheme(1400.0);
    base.timeline = TouchTimeline{};
    cfg.sensors.push_back(sensor_from_json(ss, base, "second_sensor"));
  }

  if (j.contains("grouping")) {
    const auto& g = j["grouping"];
    check_keys(g, {"group_size"}, "grouping");
    if (g.contains("group_size")) {
      const auto& v = g["group_size"];
      if (v.is_string() && v.get<std::string>() == "auto") {
        cfg.group_size.reset();
      } else if (v.is_number_unsigned() && v.get<std::size_t>() > 0) {
        cfg.group_size = v.get<std::size_t>();
      } else {
        throw ConfigError("grouping.group_size must be \"auto\" or a positive integer");
      }
    }
  }

  if (j.contains("calibration")) {
    const auto& c = j["calibration"];
    check_keys(c, {"locations_mm", "forces_n"}, "calibration");
    cfg.calibration.locations_mm = field(c, "locations_mm", cfg.calibration.locations_mm, "calibration");
    cfg.calibration.forces_n = field(c, "forces_n", cfg.calibration.forces_n, "calibration");
  }

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    const std::string w = "sweep";
    check_keys(s, {"trials", "snr_start_db", "snr_stop_db", "snr_step_db", "test_locations_mm", "force_min_n",
                   "force_max_n", "workers"},
               w);
    auto& sw = cfg.sweep;
    sw.trials = field(s, "trials", sw.trials, w);
    sw.snr_start_db = field(s, "snr_start_db", sw.snr_start_db, w);
    sw.snr_stop_db = field(s, "snr_stop_db", sw.snr_stop_db, w);
    sw.snr_step_db = field(s, "snr_step_db", sw.snr_step_db, w);
    sw.test_locations_mm = field(s, "test_locations_mm", sw.test_locations_mm, w);
    sw.force_min_n = field(s, "force_min_n", sw.force_min_n, w);
    sw.force_max_n = field(s, "force_max_n", sw.force_max_n, w);
    sw.workers = field(s, "workers", sw.workers, w);
  }

  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& p = cfg.primary();
  json paths = json::array();
  for (const auto& sp : cfg.static_paths) paths.push_back(path_to_json(sp));
  json j{{"waveform", waveform_to_json(cfg.waveform)},
         {"clocks", scheme_to_json(p.scheme)},
         {"geometry", geometry_to_json(p.geom)},
         {"mechanics", mechanics_to_json(p.mech)},
         {"multipath", json{{"paths", paths}, {"sensor_path", path_to_json(p.path)}}},
         {"noise", noise_to_json(cfg.noise)},
         {"timeline", timeline_to_json(p.timeline)},
         {"calibration", json{{"locations_mm", cfg.calibration.locations_mm}, {"forces_n", cfg.calibration.forces_n}}},
         {"sweep", json{{"trials", cfg.sweep.trials},
                        {"snr_start_db", cfg.sweep.snr_start_db},
                        {"snr_stop_db", cfg.sweep.snr_stop_db},
                        {"snr_step_db", cfg.sweep.snr_step_db},
                        {"test_locations_mm", cfg.sweep.test_locations_mm},
                        {"force_min_n", cfg.sweep.force_min_n},
                        {"force_max_n", cfg.sweep.force_max_n},
                        {"workers", cfg.sweep.workers}}}};
  j["grouping"] = json{{"group_size", cfg.group_size ? json(*cfg.group_size) : json("auto")}};
  if (cfg.sensors.size() > 1) {
    const auto& s = cfg.sensors[1];
    j["second_sensor"] = json{{"clocks", scheme_to_json(s.scheme)},
                              {"geometry", geometry_to_json(s.geom)},
                              {"mechanics", mechanics_to_json(s.mech)},
                              {"sensor_path", path_to_json(s.path)},
                              {"timeline", timeline_to_json(s.timeline)}};
  }
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::size_t resolve_group_size(const ExperimentConfig& cfg, const std::vector<double>& read_freqs) {
  try {
    if (cfg.group_size) return make_grouping(cfg.waveform, read_freqs, *cfg.group_size).group_size;
    return auto_group_size(cfg.waveform, read_freqs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grouping: ") + e.what());
  }
}

}  // namespace bsforce
