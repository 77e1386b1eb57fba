#pragma once

// Server configuration and its JSON file format. Every key is optional; a
// missing key keeps its default. Unknown keys are rejected so that typos
// surface at startup.

#include "hat/json_io.hpp"

#include <fstream>
#include <optional>
#include <string>

namespace hat {

struct ServerConfig {
  double rate_hz = 20.0;
  double stale_input_ms = 500.0;  ///< zero command once head pose is older than this
  double smoothing = 0.0;         ///< exponential command smoothing factor, 0 = off
  ClickBindings bindings = ClickBindings::day6();
  AxisAssignment axes = AxisAssignment::pitch_yaw();
  GestureTiming timing;
  ThresholdConfig thresholds;
  ActuatorLimits limits;
  CursorLimits cursor;
  AssistConfig assist;
  DetectorConfig detector;
  RobotGeometry geometry;
  std::string scenario = "fetch_redbull";
  std::string scene_file;  ///< overrides `scenario` when set
  std::string log_dir;
  std::string listen = "127.0.0.1:8765";

  double period_s() const { return 1.0 / rate_hz; }
  double period_ms() const { return 1000.0 / rate_hz; }

  void validate() const {
    if (!(rate_hz > 0.0)) throw std::invalid_argument("rate must be positive");
    if (!(stale_input_ms > 0.0)) throw std::invalid_argument("stale_input_ms must be positive");
    if (!(smoothing >= 0.0 && smoothing < 1.0)) throw std::invalid_argument("smoothing must be in [0, 1)");
    bindings.validate();
    axes.validate();
    timing.validate();
    thresholds.validate();
    limits.validate();
    assist.validate();
    geometry.validate();
  }
};

namespace config_detail {

inline json bindings_to_json(const ClickBindings& b) {
  json list = json::array();
  for (const auto& x : b.bindings) {
    std::string gesture;
    if (x.pattern.hold) {
      gesture = "hold";
    } else if (x.pattern.max_count == INT_MAX) {
      gesture = std::to_string(x.pattern.min_count) + "+";
    } else {
      gesture = std::to_string(x.pattern.min_count);
    }
    list.push_back({{"mode", jsonio::enum_name(x.scope, jsonio::kScopes)},
                    {"gesture", gesture},
                    {"action", jsonio::enum_name(x.action, jsonio::kBindingActions)}});
  }
  return {{"id", b.id}, {"bindings", list}};
}

inline GesturePattern pattern_from(const std::string& s, const std::string& path) {
  if (s == "hold") return GesturePattern::held();
  try {
    std::size_t used = 0;
    const int n = std::stoi(s, &used);
    if (n >= 1) {
      if (used == s.size()) return GesturePattern::exactly(n);
      if (used + 1 == s.size() && s.back() == '+') return GesturePattern::at_least(n);
    }
  } catch (const std::exception&) {
  }
  throw SchemaError(path, "invalid gesture '" + s + "' (expected N, N+ or hold)");
}

/// Either a preset name ("day6") or {"id": ..., "bindings": [{mode, gesture, action}, ...]}.
inline ClickBindings bindings_from(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return ClickBindings::preset(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path, e.what());
    }
  }
  jsonio::require_object(j, path);
  jsonio::reject_unknown(j, {"id", "bindings"}, path);
  ClickBindings b;
  b.id = "custom";
  jsonio::opt_string(j, "id", b.id, path);
  b.bindings.clear();
  const json& list = j.at("bindings");
  if (!list.is_array()) throw SchemaError(path + ".bindings", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string p = path + ".bindings[" + std::to_string(i) + "]";
    jsonio::require_object(list[i], p);
    jsonio::reject_unknown(list[i], {"mode", "gesture", "action"}, p);
    Binding x;
    x.scope = jsonio::enum_from(list[i], "mode", jsonio::kScopes, p);
    x.pattern = pattern_from(jsonio::string(list[i], "gesture", p), p + ".gesture");
    x.action = jsonio::enum_from(list[i], "action", jsonio::kBindingActions, p);
    b.bindings.push_back(x);
  }
  return b;
}

inline json axis_pair_to_json(const std::array<AxisBinding, 2>& pair) {
  json arr = json::array();
  for (const auto& b : pair)
    arr.push_back({{"axis", jsonio::enum_name(b.axis, jsonio::kHeadAxes)},
                   {"actuator", jsonio::enum_name(b.actuator, jsonio::kActuators)},
                   {"sign", b.sign}});
  return arr;
}

inline std::array<AxisBinding, 2> axis_pair_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(path, "expected two axis bindings");
  std::array<AxisBinding, 2> out;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    jsonio::require_object(j[i], p);
    jsonio::reject_unknown(j[i], {"axis", "actuator", "sign"}, p);
    out[i].axis = jsonio::enum_from(j[i], "axis", jsonio::kHeadAxes, p);
    out[i].actuator = jsonio::enum_from(j[i], "actuator", jsonio::kActuators, p);
    jsonio::opt_number(j[i], "sign", out[i].sign, p);
  }
  return out;
}

/// Either a preset name ("pitch-yaw") or {"id", "drive", "arm", "wrist"}.
inline AxisAssignment axes_from(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return AxisAssignment::preset(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path, e.what());
    }
  }
  jsonio::require_object(j, path);
  jsonio::reject_unknown(j, {"id", "drive", "arm", "wrist"}, path);
  AxisAssignment a = AxisAssignment::pitch_yaw();
  a.id = "custom";
  jsonio::opt_string(j, "id", a.id, path);
  if (j.contains("drive")) a.drive = axis_pair_from(j.at("drive"), path + ".drive");
  if (j.contains("arm")) a.arm = axis_pair_from(j.at("arm"), path + ".arm");
  if (j.contains("wrist")) a.wrist = axis_pair_from(j.at("wrist"), path + ".wrist");
  return a;
}

inline json vec5(const Vector5& v) { return json::array({v[0], v[1], v[2], v[3], v[4]}); }

inline Vector5 vec5_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 5) throw SchemaError(path, "expected 5 numbers");
  Vector5 v;
  for (int i = 0; i < 5; ++i) {
    if (!j[i].is_number()) throw SchemaError(path, "expected 5 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline json range_to_json(const Range& r) { return json::array({r.min, r.max}); }

inline void opt_range(const json& j, const char* key, Range& r, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw SchemaError(path + "." + key, "expected [min, max]");
  r = {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace config_detail

inline json to_json_value(const ServerConfig& c) {
  using namespace config_detail;
  const auto& g = c.geometry;
  return {
      {"rate_hz", c.rate_hz},
      {"stale_input_ms", c.stale_input_ms},
      {"smoothing", c.smoothing},
      {"bindings", bindings_to_json(c.bindings)},
      {"axes", {{"id", c.axes.id}, {"drive", axis_pair_to_json(c.axes.drive)}, {"arm", axis_pair_to_json(c.axes.arm)},
                {"wrist", axis_pair_to_json(c.axes.wrist)}}},
      {"timing", {{"multi_click_gap_ms", c.timing.multi_click_gap_ms}, {"hold_threshold_ms", c.timing.hold_threshold_ms},
                  {"sequence_settle_ms", c.timing.sequence_settle_ms}}},
      {"thresholds", {{"t_low", c.thresholds.t_low}, {"t_high", c.thresholds.t_high},
                      {"cursor_t_high", c.thresholds.cursor_t_high}}},
      {"limits", {{"base_translation", c.limits.base_translation}, {"base_rotation", c.limits.base_rotation},
                  {"lift", c.limits.lift}, {"extension", c.limits.extension}, {"wrist", c.limits.wrist},
                  {"gripper", c.limits.gripper}}},
      {"cursor", {{"max_speed", c.cursor.max_speed}, {"width", c.cursor.width}, {"height", c.cursor.height}}},
      {"assist", {{"rho", c.assist.rho}, {"rho_c", c.assist.rho_c}, {"gain_mask", vec5(c.assist.gain_mask)},
                  {"gains", vec5(c.assist.gains)}, {"damping", c.assist.damping}}},
      {"detector", {{"position_noise_stddev", c.detector.position_noise_stddev}, {"seed", c.detector.seed}}},
      {"geometry", {{"arm_mount_offset", g.arm_mount_offset}, {"gripper_length", g.gripper_length},
                    {"lift_range", range_to_json(g.lift_range)}, {"extension_range", range_to_json(g.extension_range)},
                    {"wrist_range", range_to_json(g.wrist_range)}, {"gripper_range", range_to_json(g.gripper_range)}}},
      {"scenario", c.scenario},
      {"scene_file", c.scene_file},
      {"log_dir", c.log_dir},
      {"listen", c.listen},
  };
}

inline ServerConfig config_from(const json& j) {
  using namespace config_detail;
  jsonio::require_object(j, "");
  jsonio::reject_unknown(j, {"rate_hz", "stale_input_ms", "smoothing", "bindings", "axes", "timing", "thresholds",
                             "limits", "cursor", "assist", "detector", "geometry", "scenario", "scene_file", "log_dir",
                             "listen"},
                         "");
  ServerConfig c;
  jsonio::opt_number(j, "rate_hz", c.rate_hz, "");
  jsonio::opt_number(j, "stale_input_ms", c.stale_input_ms, "");
  jsonio::opt_number(j, "smoothing", c.smoothing, "");
  if (j.contains("bindings")) c.bindings = bindings_from(j.at("bindings"), "bindings");
  if (j.contains("axes")) c.axes = axes_from(j.at("axes"), "axes");
  if (j.contains("timing")) {
    const json& t = jsonio::require_object(j.at("timing"), "timing");
    jsonio::reject_unknown(t, {"multi_click_gap_ms", "hold_threshold_ms", "sequence_settle_ms"}, "timing");
    jsonio::opt_number(t, "multi_click_gap_ms", c.timing.multi_click_gap_ms, "timing");
    c.timing.sequence_settle_ms = c.timing.multi_click_gap_ms;
    jsonio::opt_number(t, "hold_threshold_ms", c.timing.hold_threshold_ms, "timing");
    jsonio::opt_number(t, "sequence_settle_ms", c.timing.sequence_settle_ms, "timing");
  }
  if (j.contains("thresholds")) {
    const json& t = jsonio::require_object(j.at("thresholds"), "thresholds");
    jsonio::reject_unknown(t, {"t_low", "t_high", "cursor_t_high"}, "thresholds");
    jsonio::opt_number(t, "t_low", c.thresholds.t_low, "thresholds");
    jsonio::opt_number(t, "t_high", c.thresholds.t_high, "thresholds");
    jsonio::opt_number(t, "cursor_t_high", c.thresholds.cursor_t_high, "thresholds");
  }
  if (j.contains("limits")) {
    const json& t = jsonio::require_object(j.at("limits"), "limits");
    jsonio::reject_unknown(t, {"base_translation", "base_rotation", "lift", "extension", "wrist", "gripper"}, "limits");
    jsonio::opt_number(t, "base_translation", c.limits.base_translation, "limits");
    jsonio::opt_number(t, "base_rotation", c.limits.base_rotation, "limits");
    jsonio::opt_number(t, "lift", c.limits.lift, "limits");
    jsonio::opt_number(t, "extension", c.limits.extension, "limits");
    jsonio::opt_number(t, "wrist", c.limits.wrist, "limits");
    jsonio::opt_number(t, "gripper", c.limits.gripper, "limits");
  }
  if (j.contains("cursor")) {
    const json& t = jsonio::require_object(j.at("cursor"), "cursor");
    jsonio::reject_unknown(t, {"max_speed", "width", "height"}, "cursor");
    jsonio::opt_number(t, "max_speed", c.cursor.max_speed, "cursor");
    jsonio::opt_number(t, "width", c.cursor.width, "cursor");
    jsonio::opt_number(t, "height", c.cursor.height, "cursor");
  }
  if (j.contains("assist")) {
    const json& t = jsonio::require_object(j.at("assist"), "assist");
    jsonio::reject_unknown(t, {"rho", "rho_c", "gain_mask", "gains", "damping"}, "assist");
    jsonio::opt_number(t, "rho", c.assist.rho, "assist");
    jsonio::opt_number(t, "rho_c", c.assist.rho_c, "assist");
    jsonio::opt_number(t, "damping", c.assist.damping, "assist");
    if (t.contains("gain_mask")) c.assist.gain_mask = vec5_from(t.at("gain_mask"), "assist.gain_mask");
    if (t.contains("gains")) c.assist.gains = vec5_from(t.at("gains"), "assist.gains");
  }
  if (j.contains("detector")) {
    const json& t = jsonio::require_object(j.at("detector"), "detector");
    jsonio::reject_unknown(t, {"position_noise_stddev", "seed"}, "detector");
    jsonio::opt_number(t, "position_noise_stddev", c.detector.position_noise_stddev, "detector");
    if (t.contains("seed")) c.detector.seed = static_cast<unsigned long long>(jsonio::integer(t, "seed", "detector"));
  }
  if (j.contains("geometry")) {
    const json& t = jsonio::require_object(j.at("geometry"), "geometry");
    jsonio::reject_unknown(t, {"arm_mount_offset", "gripper_length", "lift_range", "extension_range", "wrist_range",
                               "gripper_range"},
                           "geometry");
    jsonio::opt_number(t, "arm_mount_offset", c.geometry.arm_mount_offset, "geometry");
    jsonio::opt_number(t, "gripper_length", c.geometry.gripper_length, "geometry");
    opt_range(t, "lift_range", c.geometry.lift_range, "geometry");
    opt_range(t, "extension_range", c.geometry.extension_range, "geometry");
    opt_range(t, "wrist_range", c.geometry.wrist_range, "geometry");
    opt_range(t, "gripper_range", c.geometry.gripper_range, "geometry");
  }
  jsonio::opt_string(j, "scenario", c.scenario, "");
  jsonio::opt_string(j, "scene_file", c.scene_file, "");
  jsonio::opt_string(j, "log_dir", c.log_dir, "");
  jsonio::opt_string(j, "listen", c.listen, "");
  return c;
}

inline ServerConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  try {
    return config_from(json::parse(in));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file " + path + ": " + e.what());
  }
}

/// Digest of everything that influences the simulated outcome. Log directory
/// and listen address are excluded.
inline std::string config_digest(const ServerConfig& c) {
  json j = to_json_value(c);
  j.erase("log_dir");
  j.erase("listen");
  return hex_digest(j.dump());
}

/// Resolves the scenario named by the configuration (scene file first).
inline Scenario resolve_scenario(const ServerConfig& c) {
  Scenario s = c.scene_file.empty() ? load_scenario(c.scenario) : load_scene_file(c.scene_file);
  s.validate(c.geometry);
  return s;
}

}  // namespace hat
