#pragma once

// JSON mappings for the core value types. Readers reject unknown keys.

#include <initializer_list>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "bsforce/calib.hpp"
#include "bsforce/chansim.hpp"
#include "bsforce/clocks.hpp"
#include "bsforce/transducer.hpp"

namespace bsforce {

using json = nlohmann::json;

/// Raised for malformed or inconsistent configuration documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError if `obj` is not an object or carries a key outside
/// `allowed`.
void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where);

json clock_to_json(const SwitchClock& c);
SwitchClock clock_from_json(const json& j, const std::string& where);

/// {f_s_hz, clock_a, clock_b}. When only f_s_hz is present the preset pair
/// is used.
json scheme_to_json(const ClockScheme& s);
ClockScheme scheme_from_json(const json& j, const std::string& where);

json waveform_to_json(const WaveformConfig& w);
WaveformConfig waveform_from_json(const json& j);

json geometry_to_json(const SensorGeometry& g);
SensorGeometry geometry_from_json(const json& j, const std::string& where);

json mechanics_to_json(const MechanicalParams& m);
MechanicalParams mechanics_from_json(const json& j, const std::string& where);

json path_to_json(const PathTerm& p);
PathTerm path_from_json(const json& j, const std::string& where);

json timeline_to_json(const TouchTimeline& t);
TouchTimeline timeline_from_json(const json& j, const std::string& where);

json noise_to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const json& j);

json model_to_json(const SensorModel& m);
SensorModel model_from_json(const json& j);

json dataset_to_json(const CalibrationDataset& d);
CalibrationDataset dataset_from_json(const json& j);

}  // namespace bsforce
