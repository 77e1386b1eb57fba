#pragma once

// JSON mappings for domain types. Objects use nlohmann::json's default sorted
// map, so dump() yields a canonical byte sequence for equal values.
//
// Readers are lenient about missing keys (the field keeps its default) unless a
// key is listed as required. Strict readers used for configuration files
// additionally reject unknown keys.

#include "hat/assist.hpp"
#include "hat/hat_mapping.hpp"
#include "hat/kinematics.hpp"
#include "hat/modes.hpp"
#include "hat/sim.hpp"

#include <json.hpp>  // nlohmann/json 3.11, vendored

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hat {

using json = nlohmann::json;

/// Raised for schema violations; `field` is a dotted path to the offending key.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace jsonio {

inline std::string join(std::string_view path, std::string_view key) {
  return path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
}

inline const json& require_object(const json& j, std::string_view path) {
  if (!j.is_object()) throw SchemaError(std::string(path), "expected an object");
  return j;
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw SchemaError(join(path, it.key()), "unknown key");
  }
}

inline double number(const json& j, std::string_view key, std::string_view path) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(join(path, key), "missing required field");
  if (!it->is_number()) throw SchemaError(join(path, key), "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw SchemaError(join(path, key), "must be finite");
  return v;
}

inline void opt_number(const json& j, std::string_view key, double& out, std::string_view path) {
  if (j.contains(key)) out = number(j, key, path);
}

inline void opt_bool(const json& j, std::string_view key, bool& out, std::string_view path) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_boolean()) throw SchemaError(join(path, key), "expected a boolean");
  out = it->get<bool>();
}

inline std::string string(const json& j, std::string_view key, std::string_view path) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(join(path, key), "missing required field");
  if (!it->is_string()) throw SchemaError(join(path, key), "expected a string");
  return it->get<std::string>();
}

inline void opt_string(const json& j, std::string_view key, std::string& out, std::string_view path) {
  if (j.contains(key)) out = string(j, key, path);
}

inline long long integer(const json& j, std::string_view key, std::string_view path) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(join(path, key), "missing required field");
  if (!it->is_number_integer()) throw SchemaError(join(path, key), "expected an integer");
  return it->get<long long>();
}

inline Eigen::Vector3d vec3(const json& j, std::string_view path) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(std::string(path), "expected [x, y, z]");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw SchemaError(std::string(path), "expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Eigen::Vector2d vec2(const json& j, std::string_view path) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(std::string(path), "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_array(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json to_array(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

template <class E, std::size_t N>
E enum_from(const json& j, std::string_view key, const std::pair<E, std::string_view> (&table)[N], std::string_view path) {
  const std::string s = string(j, key, path);
  for (const auto& [e, name] : table)
    if (name == s) return e;
  std::string options;
  for (const auto& [e, name] : table) options += (options.empty() ? "" : "|") + std::string(name);
  throw SchemaError(join(path, key), "invalid value '" + s + "' (expected " + options + ")");
}

template <class E, std::size_t N>
std::string enum_name(E e, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, name] : table)
    if (v == e) return std::string(name);
  return "?";
}

inline constexpr std::pair<Mode, std::string_view> kModes[] = {
    {Mode::Idle, "idle"}, {Mode::RobotControl, "robot_control"}, {Mode::CursorControl, "cursor_control"}};
inline constexpr std::pair<Submode, std::string_view> kSubmodes[] = {
    {Submode::Drive, "drive"}, {Submode::Arm, "arm"}, {Submode::Wrist, "wrist"}};
inline constexpr std::pair<CursorStyle, std::string_view> kCursorStyles[] = {
    {CursorStyle::Velocity, "velocity"}, {CursorStyle::Position, "position"}};
inline constexpr std::pair<ClickAction, std::string_view> kClickActions[] = {
    {ClickAction::Press, "press"}, {ClickAction::Release, "release"}};
inline constexpr std::pair<HeadAxis, std::string_view> kHeadAxes[] = {
    {HeadAxis::Roll, "roll"}, {HeadAxis::Pitch, "pitch"}, {HeadAxis::Yaw, "yaw"}};
inline constexpr std::pair<Actuator, std::string_view> kActuators[] = {
    {Actuator::BaseTranslation, "base_translation"}, {Actuator::BaseRotation, "base_rotation"},
    {Actuator::Lift, "lift"}, {Actuator::Extension, "extension"}, {Actuator::Wrist, "wrist"},
    {Actuator::Gripper, "gripper"}};
inline constexpr std::pair<BindingScope, std::string_view> kScopes[] = {
    {BindingScope::Idle, "idle"}, {BindingScope::RobotControl, "robot_control"},
    {BindingScope::CursorControl, "cursor_control"}, {BindingScope::Any, "any"}};
inline constexpr std::pair<BindingAction, std::string_view> kBindingActions[] = {
    {BindingAction::EnterRobotControl, "enter_robot_control"}, {BindingAction::EnterCursorControl, "enter_cursor_control"},
    {BindingAction::GoIdle, "idle"}, {BindingAction::CycleSubmode, "cycle_submode"},
    {BindingAction::ToggleAssist, "toggle_assist"}};

}  // namespace jsonio

// ---------------------------------------------------------------------------
// Robot and world
// ---------------------------------------------------------------------------

inline json to_json_value(const RobotState& s) {
  return {{"x", s.x},         {"y", s.y},           {"heading", s.heading}, {"lift", s.lift},
          {"extension", s.extension}, {"wrist", s.wrist}, {"gripper", s.gripper}};
}

inline RobotState robot_state_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  RobotState s;
  s.x = jsonio::number(j, "x", path);
  s.y = jsonio::number(j, "y", path);
  s.heading = jsonio::number(j, "heading", path);
  s.lift = jsonio::number(j, "lift", path);
  s.extension = jsonio::number(j, "extension", path);
  s.wrist = jsonio::number(j, "wrist", path);
  s.gripper = jsonio::number(j, "gripper", path);
  return s;
}

inline json to_json_value(const JointVelocityCommand& c) {
  return {{"base_forward", c.base_forward}, {"base_rotation", c.base_rotation}, {"lift", c.lift},
          {"extension", c.extension},       {"wrist", c.wrist},                 {"gripper", c.gripper}};
}

inline JointVelocityCommand command_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  JointVelocityCommand c;
  c.base_forward = jsonio::number(j, "base_forward", path);
  c.base_rotation = jsonio::number(j, "base_rotation", path);
  c.lift = jsonio::number(j, "lift", path);
  c.extension = jsonio::number(j, "extension", path);
  c.wrist = jsonio::number(j, "wrist", path);
  c.gripper = jsonio::number(j, "gripper", path);
  return c;
}

inline json to_json_value(const WorldObject& o) {
  return {{"id", o.id},
          {"label", o.label},
          {"position", jsonio::to_array(o.position)},
          {"grasp_radius", o.grasp_radius},
          {"graspable", o.graspable}};
}

inline WorldObject world_object_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  WorldObject o;
  o.id = static_cast<int>(jsonio::integer(j, "id", path));
  o.label = jsonio::string(j, "label", path);
  if (o.label.empty()) throw SchemaError(jsonio::join(path, "label"), "must be nonempty");
  if (!j.contains("position")) throw SchemaError(jsonio::join(path, "position"), "missing required field");
  o.position = jsonio::vec3(j.at("position"), jsonio::join(path, "position"));
  jsonio::opt_number(j, "grasp_radius", o.grasp_radius, path);
  jsonio::opt_bool(j, "graspable", o.graspable, path);
  if (!(o.grasp_radius > 0.0)) throw SchemaError(jsonio::join(path, "grasp_radius"), "must be positive");
  return o;
}

inline json to_json_value(const Region& r) {
  return {{"min", jsonio::to_array(r.min)}, {"max", jsonio::to_array(r.max)}};
}

inline Region region_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  if (!j.contains("min") || !j.contains("max")) throw SchemaError(std::string(path), "region needs min and max");
  return {jsonio::vec2(j.at("min"), jsonio::join(path, "min")), jsonio::vec2(j.at("max"), jsonio::join(path, "max"))};
}

inline json to_json_value(const WorldState& w) {
  json objects = json::array();
  for (const auto& o : w.objects) objects.push_back(to_json_value(o));
  return {{"robot", to_json_value(w.robot)},
          {"objects", objects},
          {"attached", w.attached ? json(*w.attached) : json(nullptr)},
          {"tick", w.tick},
          {"sim_time", w.sim_time},
          {"workspace", to_json_value(w.workspace)}};
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex_digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

/// Digest of the canonical serialization of the full world.
inline std::string world_digest(const WorldState& w) { return hex_digest(to_json_value(w).dump()); }

// ---------------------------------------------------------------------------
// Scene files
// ---------------------------------------------------------------------------

inline json to_json_value(const Scenario& s) {
  json objects = json::array();
  for (const auto& o : s.initial.objects) objects.push_back(to_json_value(o));
  json placements = json::array();
  for (const auto& p : s.placements) placements.push_back({{"object_id", p.object_id}, {"region", to_json_value(p.region)}});
  return {{"name", s.name},
          {"description", s.description},
          {"robot", to_json_value(s.initial.robot)},
          {"objects", objects},
          {"workspace", to_json_value(s.initial.workspace)},
          {"queries", s.default_queries},
          {"placements", placements},
          {"completion", s.completion}};
}

inline Scenario scenario_from(const json& j) {
  jsonio::require_object(j, "");
  jsonio::reject_unknown(j, {"name", "description", "robot", "objects", "workspace", "queries", "placements", "completion"}, "");
  Scenario s;
  s.name = jsonio::string(j, "name", "");
  jsonio::opt_string(j, "description", s.description, "");
  jsonio::opt_string(j, "completion", s.completion, "");
  s.initial.robot = j.contains("robot") ? robot_state_from(j.at("robot"), "robot") : detail::start_world().robot;
  s.initial.workspace = j.contains("workspace") ? region_from(j.at("workspace"), "workspace") : detail::start_world().workspace;
  if (j.contains("objects")) {
    const json& arr = j.at("objects");
    if (!arr.is_array()) throw SchemaError("objects", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.initial.objects.push_back(world_object_from(arr[i], "objects[" + std::to_string(i) + "]"));
  }
  if (j.contains("queries")) {
    const json& arr = j.at("queries");
    if (!arr.is_array()) throw SchemaError("queries", "expected an array of strings");
    for (const auto& q : arr) {
      if (!q.is_string()) throw SchemaError("queries", "expected an array of strings");
      s.default_queries.push_back(q.get<std::string>());
    }
  }
  if (j.contains("placements")) {
    const json& arr = j.at("placements");
    if (!arr.is_array()) throw SchemaError("placements", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "placements[" + std::to_string(i) + "]";
      jsonio::require_object(arr[i], path);
      PlacementGoal p;
      p.object_id = static_cast<int>(jsonio::integer(arr[i], "object_id", path));
      if (!arr[i].contains("region")) throw SchemaError(jsonio::join(path, "region"), "missing required field");
      p.region = region_from(arr[i].at("region"), jsonio::join(path, "region"));
      s.placements.push_back(p);
    }
  }
  return s;
}

inline Scenario load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("scene file " + path + ": " + e.what());
  }
  return scenario_from(j);
}

// ---------------------------------------------------------------------------
// Input devices and modes
// ---------------------------------------------------------------------------

inline json to_json_value(const OrientationSample& s) {
  return {{"roll", s.roll}, {"pitch", s.pitch}, {"yaw", s.yaw}, {"t_ms", s.timestamp_ms}};
}

inline OrientationSample orientation_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  return {jsonio::number(j, "roll", path), jsonio::number(j, "pitch", path), jsonio::number(j, "yaw", path),
          jsonio::number(j, "t_ms", path)};
}

inline json to_json_value(const ClickEvent& e) {
  return {{"action", jsonio::enum_name(e.action, jsonio::kClickActions)}, {"t_ms", e.timestamp_ms}};
}

inline ClickEvent click_event_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  return {jsonio::enum_from(j, "action", jsonio::kClickActions, path), jsonio::number(j, "t_ms", path)};
}

inline json to_json_value(const ModeState& m) {
  return {{"mode", jsonio::enum_name(m.mode, jsonio::kModes)},
          {"submode", jsonio::enum_name(m.submode, jsonio::kSubmodes)},
          {"calibrated", m.calibrated},
          {"assist_enabled", m.assist_enabled},
          {"cursor_style", jsonio::enum_name(m.cursor_style, jsonio::kCursorStyles)}};
}

inline ModeState mode_state_from(const json& j, std::string_view path) {
  jsonio::require_object(j, path);
  ModeState m;
  m.mode = jsonio::enum_from(j, "mode", jsonio::kModes, path);
  m.submode = jsonio::enum_from(j, "submode", jsonio::kSubmodes, path);
  m.cursor_style = jsonio::enum_from(j, "cursor_style", jsonio::kCursorStyles, path);
  jsonio::opt_bool(j, "calibrated", m.calibrated, path);
  jsonio::opt_bool(j, "assist_enabled", m.assist_enabled, path);
  return m;
}

}  // namespace hat
