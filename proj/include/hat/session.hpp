#pragma once

// Session logs: newline-delimited JSON. Line 1 is a header
//
//   {"format":"hat-session-log","version":1,"config_digest":..,"scenario":..,
//    "scenario_digest":..,"rate_hz":..}
//
// followed by one LogRecord per tick, ticks numbered 1, 2, 3, ...

#include "hat/config.hpp"
#include "hat/protocol.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hat {

inline constexpr std::string_view kSessionLogFormat = "hat-session-log";
inline constexpr int kSessionLogVersion = 1;

struct LogHeader {
  std::string config_digest;
  std::string scenario;
  std::string scenario_digest;
  double rate_hz = 20.0;

  bool operator==(const LogHeader&) const = default;
};

struct LogRecord {
  long long tick = 0;
  double t_ms = 0.0;
  std::optional<OrientationSample> head_pose;  ///< sample in effect this tick
  std::vector<ClickEvent> clicks;              ///< click events received this tick
  std::vector<InboundMessage> inbound;         ///< every message received this tick, in order
  ModeState mode;
  JointVelocityCommand command;
  RobotState robot;
  std::string state_digest;  ///< digest of the full world after this tick
  double assist_alpha = 0.0;
  std::optional<int> g_star;
  bool complete = false;

  bool operator==(const LogRecord&) const = default;
};

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json_value(const LogHeader& h) {
  return {{"format", kSessionLogFormat}, {"version", kSessionLogVersion}, {"config_digest", h.config_digest},
          {"scenario", h.scenario},      {"scenario_digest", h.scenario_digest}, {"rate_hz", h.rate_hz}};
}

inline LogHeader log_header_from(const json& j) {
  jsonio::require_object(j, "");
  if (jsonio::string(j, "format", "") != kSessionLogFormat) throw SchemaError("format", "not a session log");
  if (jsonio::integer(j, "version", "") != kSessionLogVersion) throw SchemaError("version", "unsupported version");
  return {jsonio::string(j, "config_digest", ""), jsonio::string(j, "scenario", ""),
          jsonio::string(j, "scenario_digest", ""), jsonio::number(j, "rate_hz", "")};
}

inline json to_json_value(const LogRecord& r) {
  json clicks = json::array();
  for (const auto& c : r.clicks) clicks.push_back(to_json_value(c));
  json inbound = json::array();
  for (const auto& m : r.inbound) inbound.push_back(to_json_value(m));
  return {{"tick", r.tick},
          {"t_ms", r.t_ms},
          {"head_pose", r.head_pose ? to_json_value(*r.head_pose) : json(nullptr)},
          {"clicks", clicks},
          {"inbound", inbound},
          {"mode", to_json_value(r.mode)},
          {"command", to_json_value(r.command)},
          {"robot", to_json_value(r.robot)},
          {"state_digest", r.state_digest},
          {"assist_alpha", r.assist_alpha},
          {"g_star", r.g_star ? json(*r.g_star) : json(nullptr)},
          {"complete", r.complete}};
}

inline LogRecord log_record_from(const json& j) {
  jsonio::require_object(j, "");
  LogRecord r;
  r.tick = jsonio::integer(j, "tick", "");
  r.t_ms = jsonio::number(j, "t_ms", "");
  if (j.contains("head_pose") && !j.at("head_pose").is_null()) r.head_pose = orientation_from(j.at("head_pose"), "head_pose");
  if (j.contains("clicks"))
    for (std::size_t i = 0; i < j.at("clicks").size(); ++i)
      r.clicks.push_back(click_event_from(j.at("clicks")[i], "clicks[" + std::to_string(i) + "]"));
  if (j.contains("inbound")) {
    if (!j.at("inbound").is_array()) throw SchemaError("inbound", "expected an array");
    for (const auto& m : j.at("inbound")) r.inbound.push_back(inbound_from(m));
  }
  r.mode = mode_state_from(j.at("mode"), "mode");
  r.command = command_from(j.at("command"), "command");
  r.robot = robot_state_from(j.at("robot"), "robot");
  r.state_digest = jsonio::string(j, "state_digest", "");
  jsonio::opt_number(j, "assist_alpha", r.assist_alpha, "");
  r.g_star = optional_int(j, "g_star", "");
  jsonio::opt_bool(j, "complete", r.complete, "");
  return r;
}

inline std::string serialize(const LogRecord& r) { return to_json_value(r).dump(); }

/// In-memory session log with tick contiguity enforced on append.
class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(LogHeader header) : header_(std::move(header)) {}

  void append(LogRecord record) {
    const long long expected = records_.empty() ? 1 : records_.back().tick + 1;
    if (record.tick != expected)
      throw LogError("out-of-order tick " + std::to_string(record.tick) + ", expected " + std::to_string(expected));
    records_.push_back(std::move(record));
  }

  const LogHeader& header() const { return header_; }
  const std::vector<LogRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  void write(std::ostream& out) const {
    out << to_json_value(header_).dump() << '\n';
    for (const auto& r : records_) out << serialize(r) << '\n';
  }

 private:
  LogHeader header_;
  std::vector<LogRecord> records_;
};

inline SessionLog read_session_log(std::istream& in) {
  std::string line;
  long long line_no = 0;
  std::optional<SessionLog> log;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!log) {
        log.emplace(log_header_from(j));
      } else {
        log->append(log_record_from(j));
      }
    } catch (const std::exception& e) {
      throw LogError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!log) throw LogError("line 1: missing session log header");
  return std::move(*log);
}

inline SessionLog read_session_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LogError("cannot open " + path);
  return read_session_log(in);
}

/// Appends records to a file as they are produced. Flushes at least once per
/// second of wall time and on destruction.
class SessionWriter {
 public:
  SessionWriter(const std::string& path, const LogHeader& header) : out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw LogError("cannot open " + path + " for writing");
    out_ << to_json_value(header).dump() << '\n';
    out_.flush();
    last_flush_ = std::chrono::steady_clock::now();
  }

  SessionWriter(const SessionWriter&) = delete;
  SessionWriter& operator=(const SessionWriter&) = delete;

  ~SessionWriter() { out_.flush(); }

  void append(const LogRecord& record) {
    if (last_tick_ && record.tick != *last_tick_ + 1)
      throw LogError("out-of-order tick " + std::to_string(record.tick));
    if (!last_tick_ && record.tick != 1) throw LogError("first record must be tick 1");
    out_ << serialize(record) << '\n';
    last_tick_ = record.tick;
    const auto now = std::chrono::steady_clock::now();
    if (now - last_flush_ >= std::chrono::seconds(1)) {
      out_.flush();
      last_flush_ = now;
    }
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::optional<long long> last_tick_;
  std::chrono::steady_clock::time_point last_flush_;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct SessionMetrics {
  std::optional<double> completion_time_s;
  long long ticks = 0;
  int mode_switch_count = 0;
  int calibration_count = 0;
  int reset_count = 0;
  double base_distance_m = 0.0;
  double assist_active_fraction = 0.0;

  bool operator==(const SessionMetrics&) const = default;
};

inline SessionMetrics compute_metrics(const SessionLog& log, const Scenario& scenario) {
  SessionMetrics m;
  const double rate = log.header().rate_hz;
  ModeState prev_mode;
  RobotState prev_robot = scenario.initial.robot;
  long long assisted = 0;

  for (const LogRecord& r : log.records()) {
    ++m.ticks;
    if (r.complete && !m.completion_time_s) m.completion_time_s = static_cast<double>(r.tick) / rate;
    if (r.mode.mode != prev_mode.mode || (r.mode.mode == Mode::RobotControl && r.mode.submode != prev_mode.submode))
      ++m.mode_switch_count;
    if (r.mode.calibrated && !prev_mode.calibrated) ++m.calibration_count;
    bool was_reset = false;
    for (const auto& msg : r.inbound) {
      if (!std::holds_alternative<ResetMsg>(msg)) continue;
      ++m.reset_count;
      was_reset = true;
    }
    // a reset teleports the robot home; that jump is not distance traveled
    if (!was_reset) m.base_distance_m += std::hypot(r.robot.x - prev_robot.x, r.robot.y - prev_robot.y);
    if (r.mode.mode == Mode::RobotControl && r.mode.assist_enabled) ++assisted;
    prev_mode = r.mode;
    prev_robot = r.robot;
  }
  if (m.ticks > 0) m.assist_active_fraction = static_cast<double>(assisted) / static_cast<double>(m.ticks);
  return m;
}

inline std::string metrics_csv_header() {
  return "scenario,ticks,completion_time_s,mode_switch_count,calibration_count,reset_count,base_distance_m,"
         "assist_active_fraction";
}

inline std::string metrics_csv_row(const std::string& scenario, const SessionMetrics& m) {
  std::ostringstream os;
  os.precision(10);
  os << scenario << ',' << m.ticks << ',';
  if (m.completion_time_s) os << *m.completion_time_s;
  os << ',' << m.mode_switch_count << ',' << m.calibration_count << ',' << m.reset_count << ',' << m.base_distance_m
     << ',' << m.assist_active_fraction;
  return os.str();
}

inline json to_json_value(const SessionMetrics& m) {
  return {{"completion_time_s", m.completion_time_s ? json(*m.completion_time_s) : json(nullptr)},
          {"ticks", m.ticks},
          {"mode_switch_count", m.mode_switch_count},
          {"calibration_count", m.calibration_count},
          {"reset_count", m.reset_count},
          {"base_distance_m", m.base_distance_m},
          {"assist_active_fraction", m.assist_active_fraction}};
}

}  // namespace hat
