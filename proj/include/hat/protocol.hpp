#pragma once

// Wire protocol between the teleoperation loop and its consoles. One JSON
// object per message. Every message carries "protocol_version" and "type".
// Unknown fields are ignored on input and never produced on output.
//
// Inbound (console -> server):
//   head_pose     {roll_deg, pitch_deg, yaw_deg, t_ms}
//   click         {action: "press"|"release", t_ms}
//   query         {labels: [string, ...]}
//   reset         {}
//   cursor_target {style: "velocity"|"position"}
//
// Outbound (server -> console):
//   snapshot      one per tick, see OutboundSnapshot
//   error         {field, message} reply to a rejected inbound message

#include "hat/json_io.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hat {

inline constexpr int kProtocolVersion = 1;

struct HeadPoseMsg {
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
  double t_ms = 0.0;

  OrientationSample sample() const { return {roll_deg, pitch_deg, yaw_deg, t_ms}; }
  bool operator==(const HeadPoseMsg&) const = default;
};

struct ClickMsg {
  ClickAction action = ClickAction::Press;
  double t_ms = 0.0;

  ClickEvent event() const { return {action, t_ms}; }
  bool operator==(const ClickMsg&) const = default;
};

struct QueryMsg {
  std::vector<std::string> labels;
  bool operator==(const QueryMsg&) const = default;
};

struct ResetMsg {
  bool operator==(const ResetMsg&) const = default;
};

struct CursorTargetMsg {
  CursorStyle style = CursorStyle::Velocity;
  bool operator==(const CursorTargetMsg&) const = default;
};

using InboundMessage = std::variant<HeadPoseMsg, ClickMsg, QueryMsg, ResetMsg, CursorTargetMsg>;

/// A rejected message. `field` names the offending key ("" when the whole body is bad).
class ProtocolError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

inline json to_json_value(const InboundMessage& msg) {
  json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HeadPoseMsg>) {
          return {{"type", "head_pose"}, {"roll_deg", m.roll_deg}, {"pitch_deg", m.pitch_deg},
                  {"yaw_deg", m.yaw_deg},  {"t_ms", m.t_ms}};
        } else if constexpr (std::is_same_v<T, ClickMsg>) {
          return {{"type", "click"}, {"action", jsonio::enum_name(m.action, jsonio::kClickActions)}, {"t_ms", m.t_ms}};
        } else if constexpr (std::is_same_v<T, QueryMsg>) {
          return {{"type", "query"}, {"labels", m.labels}};
        } else if constexpr (std::is_same_v<T, ResetMsg>) {
          return {{"type", "reset"}};
        } else {
          return {{"type", "cursor_target"}, {"style", jsonio::enum_name(m.style, jsonio::kCursorStyles)}};
        }
      },
      msg);
  j["protocol_version"] = kProtocolVersion;
  return j;
}

inline InboundMessage inbound_from(const json& j) {
  try {
    jsonio::require_object(j, "");
    const long long version = jsonio::integer(j, "protocol_version", "");
    if (version != kProtocolVersion)
      throw SchemaError("protocol_version", "unsupported version " + std::to_string(version));
    const std::string type = jsonio::string(j, "type", "");

    if (type == "head_pose") {
      HeadPoseMsg m{jsonio::number(j, "roll_deg", ""), jsonio::number(j, "pitch_deg", ""),
                    jsonio::number(j, "yaw_deg", ""), jsonio::number(j, "t_ms", "")};
      const std::pair<double, const char*> angles[] = {
          {m.roll_deg, "roll_deg"}, {m.pitch_deg, "pitch_deg"}, {m.yaw_deg, "yaw_deg"}};
      for (const auto& [v, name] : angles)
        if (v < -180.0 || v > 180.0) throw SchemaError(name, "angle outside [-180, 180]");
      return m;
    }
    if (type == "click") return ClickMsg{jsonio::enum_from(j, "action", jsonio::kClickActions, ""), jsonio::number(j, "t_ms", "")};
    if (type == "query") {
      auto it = j.find("labels");
      if (it == j.end()) throw SchemaError("labels", "missing required field");
      if (!it->is_array()) throw SchemaError("labels", "expected an array of strings");
      QueryMsg m;
      for (const auto& l : *it) {
        if (!l.is_string()) throw SchemaError("labels", "expected an array of strings");
        m.labels.push_back(l.get<std::string>());
      }
      return m;
    }
    if (type == "reset") return ResetMsg{};
    if (type == "cursor_target") return CursorTargetMsg{jsonio::enum_from(j, "style", jsonio::kCursorStyles, "")};
    throw SchemaError("type", "unknown message type '" + type + "'");
  } catch (const ProtocolError&) {
    throw;
  } catch (const SchemaError& e) {
    throw ProtocolError(e.field(), e.what());
  }
}

inline InboundMessage parse_inbound(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError("", std::string("malformed JSON: ") + e.what());
  }
  return inbound_from(j);
}

inline std::string serialize(const InboundMessage& msg) { return to_json_value(msg).dump(); }

// ---------------------------------------------------------------------------
// Outbound
// ---------------------------------------------------------------------------

struct AssistView {
  bool enabled = false;
  double alpha = 0.0;
  std::optional<int> g_star;
  std::vector<GoalProbability> probabilities;

  bool operator==(const AssistView&) const = default;
};

struct OutboundSnapshot {
  long long tick = 0;
  std::string scenario;
  std::optional<std::string> role;  ///< "operator" or "observer" when sent over a connection
  ModeState mode;
  bool calibrated = false;
  JointVelocityCommand command;
  RobotState robot;
  Eigen::Vector3d end_effector = Eigen::Vector3d::Zero();
  double end_effector_heading = 0.0;
  std::vector<WorldObject> objects;
  std::optional<int> attached_id;
  AssistView assist;
  std::optional<CursorPosition> cursor;
  bool complete = false;
  std::vector<std::string> announcements;

  bool operator==(const OutboundSnapshot& o) const {
    return tick == o.tick && scenario == o.scenario && role == o.role && mode == o.mode &&
           calibrated == o.calibrated && command == o.command && robot == o.robot &&
           end_effector == o.end_effector && end_effector_heading == o.end_effector_heading &&
           objects == o.objects && attached_id == o.attached_id && assist == o.assist && cursor == o.cursor &&
           complete == o.complete && announcements == o.announcements;
  }
};

inline json to_json_value(const OutboundSnapshot& s) {
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back(to_json_value(o));
  json probs = json::array();
  for (const auto& p : s.assist.probabilities) probs.push_back({{"id", p.id}, {"p", p.p}});
  json j = {
      {"protocol_version", kProtocolVersion},
      {"type", "snapshot"},
      {"tick", s.tick},
      {"scenario", s.scenario},
      {"mode", to_json_value(s.mode)},
      {"calibrated", s.calibrated},
      {"command", to_json_value(s.command)},
      {"robot", to_json_value(s.robot)},
      {"end_effector", {{"position", jsonio::to_array(s.end_effector)}, {"heading", s.end_effector_heading}}},
      {"objects", objects},
      {"attached_id", s.attached_id ? json(*s.attached_id) : json(nullptr)},
      {"assist", {{"enabled", s.assist.enabled}, {"alpha", s.assist.alpha},
                  {"g_star", s.assist.g_star ? json(*s.assist.g_star) : json(nullptr)}, {"probabilities", probs}}},
      {"cursor", s.cursor ? json{{"x", s.cursor->x}, {"y", s.cursor->y}} : json(nullptr)},
      {"complete", s.complete},
      {"announcements", s.announcements},
  };
  if (s.role) j["role"] = *s.role;
  return j;
}

inline std::optional<int> optional_int(const json& j, std::string_view key, std::string_view path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return static_cast<int>(jsonio::integer(j, key, path));
}

inline OutboundSnapshot snapshot_from(const json& j) {
  jsonio::require_object(j, "");
  if (jsonio::string(j, "type", "") != "snapshot") throw SchemaError("type", "expected snapshot");
  OutboundSnapshot s;
  s.tick = jsonio::integer(j, "tick", "");
  jsonio::opt_string(j, "scenario", s.scenario, "");
  if (j.contains("role")) s.role = jsonio::string(j, "role", "");
  s.mode = mode_state_from(j.at("mode"), "mode");
  jsonio::opt_bool(j, "calibrated", s.calibrated, "");
  s.command = command_from(j.at("command"), "command");
  s.robot = robot_state_from(j.at("robot"), "robot");
  const json& ee = jsonio::require_object(j.at("end_effector"), "end_effector");
  s.end_effector = jsonio::vec3(ee.at("position"), "end_effector.position");
  s.end_effector_heading = jsonio::number(ee, "heading", "end_effector");
  for (std::size_t i = 0; i < j.at("objects").size(); ++i)
    s.objects.push_back(world_object_from(j.at("objects")[i], "objects[" + std::to_string(i) + "]"));
  s.attached_id = optional_int(j, "attached_id", "");
  const json& a = jsonio::require_object(j.at("assist"), "assist");
  jsonio::opt_bool(a, "enabled", s.assist.enabled, "assist");
  s.assist.alpha = jsonio::number(a, "alpha", "assist");
  s.assist.g_star = optional_int(a, "g_star", "assist");
  for (const auto& p : a.at("probabilities"))
    s.assist.probabilities.push_back({static_cast<int>(jsonio::integer(p, "id", "assist.probabilities")),
                                      jsonio::number(p, "p", "assist.probabilities")});
  if (j.contains("cursor") && !j.at("cursor").is_null())
    s.cursor = CursorPosition{jsonio::number(j.at("cursor"), "x", "cursor"), jsonio::number(j.at("cursor"), "y", "cursor")};
  jsonio::opt_bool(j, "complete", s.complete, "");
  if (j.contains("announcements"))
    for (const auto& a2 : j.at("announcements")) s.announcements.push_back(a2.get<std::string>());
  return s;
}

inline std::string serialize(const OutboundSnapshot& s) { return to_json_value(s).dump(); }

struct ErrorReply {
  std::string field;
  std::string message;

  bool operator==(const ErrorReply&) const = default;
};

inline json to_json_value(const ErrorReply& e) {
  return {{"protocol_version", kProtocolVersion}, {"type", "error"}, {"field", e.field}, {"message", e.message}};
}

inline ErrorReply error_reply_from(const json& j) {
  jsonio::require_object(j, "");
  if (jsonio::string(j, "type", "") != "error") throw SchemaError("type", "expected error");
  return {jsonio::string(j, "field", ""), jsonio::string(j, "message", "")};
}

}  // namespace hat
