#pragma once

// The authoritative teleoperation loop:
//
//   inbound messages -> gestures -> mode state machine
//                    -> head pose mapping -> driver assistance -> simulator
//
// One call to tick() consumes everything that arrived since the previous tick
// and produces exactly one LogRecord and one OutboundSnapshot. The loop is
// deterministic: the same configuration, scenario and inbound sequence always
// produce byte-identical records.

#include "hat/assist.hpp"
#include "hat/config.hpp"
#include "hat/hat_mapping.hpp"
#include "hat/modes.hpp"
#include "hat/protocol.hpp"
#include "hat/session.hpp"
#include "hat/sim.hpp"

#include <istream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hat {

struct TickOutput {
  LogRecord record;
  OutboundSnapshot snapshot;
};

class TeleopPipeline {
 public:
  TeleopPipeline(ServerConfig config, Scenario scenario)
      : config_(std::move(config)),
        scenario_(std::move(scenario)),
        world_(scenario_.initial),
        recognizer_(config_.timing),
        smoother_(config_.smoothing),
        queries_(scenario_.default_queries),
        rng_(config_.detector.seed),
        cursor_{config_.cursor.width / 2.0, config_.cursor.height / 2.0} {
    config_.validate();
    scenario_.validate(config_.geometry);
    intent_ = current_intent();
  }

  LogHeader header() const {
    return {config_digest(config_), scenario_.name, hex_digest(to_json_value(scenario_).dump()), config_.rate_hz};
  }

  const ServerConfig& config() const { return config_; }
  const Scenario& scenario() const { return scenario_; }
  const WorldState& world() const { return world_; }
  const ModeState& mode() const { return mode_; }
  long long ticks() const { return tick_; }

  /// Server clock at tick n is n periods after start.
  double now_ms() const { return static_cast<double>(tick_) * config_.period_ms(); }

  TickOutput tick(std::span<const InboundMessage> pending) {
    ++tick_;
    const double now = now_ms();
    announcements_.clear();

    LogRecord rec;
    rec.tick = tick_;
    rec.t_ms = now;
    rec.inbound.assign(pending.begin(), pending.end());

    for (const InboundMessage& msg : pending) handle(msg, now, rec);
    run_gestures(recognizer_.advance(client_time(now)));

    const JointVelocityCommand cmd = compute_command(now);
    world_ = step(world_, cmd, config_.period_s(), config_.geometry);
    last_command_ = cmd;
    intent_ = current_intent();

    rec.head_pose = latest_pose_;
    rec.mode = mode_;
    rec.command = cmd;
    rec.robot = world_.robot;
    rec.state_digest = world_digest(world_);
    rec.assist_alpha = applied_alpha_;
    rec.g_star = applied_g_star_;
    rec.complete = check_completion(scenario_, world_);
    complete_ = rec.complete;

    return {std::move(rec), snapshot()};
  }

  /// Snapshot of the current state without advancing time.
  OutboundSnapshot snapshot() const {
    OutboundSnapshot s;
    s.tick = tick_;
    s.scenario = scenario_.name;
    s.mode = mode_;
    s.calibrated = mode_.calibrated;
    s.command = last_command_;
    s.robot = world_.robot;
    const EndEffectorPose ee = forward_kinematics(world_.robot, config_.geometry);
    s.end_effector = ee.position;
    s.end_effector_heading = ee.planar_orientation;
    s.objects = world_.objects;
    s.attached_id = world_.attached;
    s.assist.enabled = mode_.mode == Mode::RobotControl && mode_.assist_enabled;
    s.assist.alpha = intent_.confidence;
    s.assist.g_star = intent_.g_star;
    s.assist.probabilities = intent_.probabilities;
    if (mode_.mode == Mode::CursorControl) s.cursor = cursor_;
    s.complete = complete_;
    s.announcements = announcements_;
    return s;
  }

 private:
  double client_time(double now) const { return now + client_offset_ms_.value_or(0.0); }

  void handle(const InboundMessage& msg, double now, LogRecord& rec) {
    if (const auto* pose = std::get_if<HeadPoseMsg>(&msg)) {
      latest_pose_ = pose->sample();
      last_pose_at_ms_ = now;
      client_offset_ms_ = pose->t_ms - now;
    } else if (const auto* click = std::get_if<ClickMsg>(&msg)) {
      rec.clicks.push_back(click->event());
      client_offset_ms_ = click->t_ms - now;
      try {
        run_gestures(recognizer_.feed(click->event()));
      } catch (const GestureStreamError& e) {
        announcements_.push_back(std::string("click stream error: ") + e.what());
      }
    } else if (const auto* query = std::get_if<QueryMsg>(&msg)) {
      queries_ = query->labels;
    } else if (std::holds_alternative<ResetMsg>(msg)) {
      world_ = scenario_.initial;
      world_.tick = tick_ - 1;
      world_.sim_time = static_cast<double>(world_.tick) * config_.period_s();
      smoother_.reset();
      announcements_.push_back("reset");
    } else if (const auto* target = std::get_if<CursorTargetMsg>(&msg)) {
      mode_.cursor_style = target->style;
    }
  }

  void run_gestures(const std::vector<ClickGesture>& gestures) {
    for (const ClickGesture& g : gestures) {
      TransitionResult r = transition(mode_, g, config_.bindings);
      mode_ = r.state;
      for (const Effect& e : r.effects) {
        switch (e.kind) {
          case EffectKind::CalibrateNow:
            if (latest_pose_) {
              calibration_ = calibrate(*latest_pose_);
            } else {
              mode_.calibrated = false;
              announcements_.push_back("no head pose received; click again to initialize");
            }
            break;
          case EffectKind::Announce:
            if (mode_.calibrated || e.text.find("initialized") == std::string::npos) announcements_.push_back(e.text);
            break;
          case EffectKind::IgnoredGesture:
            announcements_.push_back("ignored " + e.text + " click");
            break;
          case EffectKind::CursorClick:
            announcements_.push_back("cursor click");
            break;
        }
      }
      if (!mode_.calibrated) calibration_.reset();
    }
  }

  bool input_fresh(double now) const {
    return latest_pose_ && last_pose_at_ms_ && now - *last_pose_at_ms_ <= config_.stale_input_ms;
  }

  std::vector<GoalCandidate> current_goals() {
    std::vector<WorldObject> candidates;
    for (const auto& o : world_.objects)
      if (world_.attached != o.id) candidates.push_back(o);
    return detect_objects(std::span<const WorldObject>(candidates), std::span<const std::string>(queries_),
                          config_.detector, rng_);
  }

  IntentEstimate current_intent() {
    const auto goals = current_goals();
    return infer_intent(goals, forward_kinematics(world_.robot, config_.geometry), config_.assist);
  }

  JointVelocityCommand compute_command(double now) {
    applied_alpha_ = 0.0;
    applied_g_star_.reset();
    const bool fresh = input_fresh(now);

    if (mode_.mode == Mode::CursorControl && mode_.calibrated && fresh) {
      if (mode_.cursor_style == CursorStyle::Position) {
        cursor_ = cursor_position(*latest_pose_, calibration_, config_.cursor, config_.thresholds);
      } else {
        const CursorVelocity v = cursor_velocity(*latest_pose_, calibration_, config_.cursor, config_.thresholds);
        cursor_.x = std::clamp(cursor_.x + v.vx * config_.period_s(), 0.0, config_.cursor.width);
        cursor_.y = std::clamp(cursor_.y + v.vy * config_.period_s(), 0.0, config_.cursor.height);
      }
    }

    if (mode_.mode != Mode::RobotControl || !mode_.calibrated || !calibration_ || !fresh) {
      smoother_.reset();
      return {};
    }

    JointVelocityCommand u_h = map_to_command(*latest_pose_, calibration_, mode_.submode, config_.axes,
                                              config_.limits, config_.thresholds);
    u_h = smoother_.apply(u_h);
    if (!mode_.assist_enabled) return u_h;

    const IntentEstimate intent = current_intent();
    applied_alpha_ = intent.confidence;
    applied_g_star_ = intent.g_star;
    return assist_command(world_.robot, intent, u_h, config_.assist, config_.geometry, config_.limits);
  }

  ServerConfig config_;
  Scenario scenario_;
  WorldState world_;
  ModeState mode_;
  GestureRecognizer recognizer_;
  CommandSmoother smoother_;
  std::optional<Calibration> calibration_;
  std::optional<OrientationSample> latest_pose_;
  std::optional<double> last_pose_at_ms_;
  std::optional<double> client_offset_ms_;
  std::vector<std::string> queries_;
  std::mt19937_64 rng_;
  CursorPosition cursor_;
  IntentEstimate intent_;
  JointVelocityCommand last_command_;
  double applied_alpha_ = 0.0;
  std::optional<int> applied_g_star_;
  bool complete_ = false;
  long long tick_ = 0;
  std::vector<std::string> announcements_;
};

// ---------------------------------------------------------------------------
// Scripted input
// ---------------------------------------------------------------------------

/// Inbound messages grouped per tick. Index 0 holds the messages for tick 1.
struct InputScript {
  std::vector<std::vector<InboundMessage>> ticks;
};

/// Reads either a session log (its recorded inbound messages are reused) or an
/// input script:
///
///   {"format":"hat-input-script","version":1,"ticks":N}      optional header
///   {"tick":1,"message":{...inbound message...}}             one per line
///
/// Script lines must be in non-decreasing tick order, ticks start at 1. The run
/// lasts max(N, last tick with a message).
inline InputScript read_input_script(std::istream& in) {
  InputScript script;
  std::string line;
  long long line_no = 0;
  long long declared = 0;
  long long last_tick = 0;
  bool first = true;
  bool session_log = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (first) {
        first = false;
        if (j.is_object() && j.contains("format")) {
          const std::string fmt = jsonio::string(j, "format", "");
          if (fmt == kSessionLogFormat) {
            log_header_from(j);
            session_log = true;
            continue;
          }
          if (fmt != "hat-input-script") throw SchemaError("format", "unknown format '" + fmt + "'");
          if (jsonio::integer(j, "version", "") != 1) throw SchemaError("version", "unsupported version");
          if (j.contains("ticks")) declared = jsonio::integer(j, "ticks", "");
          if (declared < 0) throw SchemaError("ticks", "must be non-negative");
          continue;
        }
      }
      if (session_log) {
        LogRecord r = log_record_from(j);
        if (r.tick != last_tick + 1) throw SchemaError("tick", "records must be contiguous");
        last_tick = r.tick;
        script.ticks.push_back(std::move(r.inbound));
        continue;
      }
      jsonio::require_object(j, "");
      const long long t = jsonio::integer(j, "tick", "");
      if (t < 1) throw SchemaError("tick", "must be >= 1");
      if (t < last_tick) throw SchemaError("tick", "ticks must be non-decreasing");
      if (!j.contains("message")) throw SchemaError("message", "missing required field");
      InboundMessage msg = inbound_from(j.at("message"));
      last_tick = t;
      if (static_cast<long long>(script.ticks.size()) < t) script.ticks.resize(static_cast<std::size_t>(t));
      script.ticks[static_cast<std::size_t>(t - 1)].push_back(std::move(msg));
    } catch (const std::exception& e) {
      throw SchemaError("", "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (static_cast<long long>(script.ticks.size()) < declared) script.ticks.resize(static_cast<std::size_t>(declared));
  return script;
}

inline void write_input_script(std::ostream& out, const InputScript& script) {
  out << json{{"format", "hat-input-script"}, {"version", 1}, {"ticks", script.ticks.size()}}.dump() << '\n';
  for (std::size_t i = 0; i < script.ticks.size(); ++i)
    for (const auto& m : script.ticks[i]) out << json{{"tick", i + 1}, {"message", to_json_value(m)}}.dump() << '\n';
}

struct HeadlessResult {
  OutboundSnapshot final_snapshot;
  SessionMetrics metrics;
  SessionLog log;
  WorldState final_world;
};

inline HeadlessResult run_headless(const ServerConfig& config, const Scenario& scenario, const InputScript& script,
                                   SessionWriter* writer = nullptr) {
  TeleopPipeline pipeline(config, scenario);
  SessionLog log(pipeline.header());
  for (const auto& pending : script.ticks) {
    TickOutput out = pipeline.tick(pending);
    if (writer) writer->append(out.record);
    log.append(std::move(out.record));
  }
  HeadlessResult r{pipeline.snapshot(), compute_metrics(log, scenario), std::move(log), pipeline.world()};
  return r;
}

class ReplayDivergence : public std::runtime_error {
 public:
  ReplayDivergence(long long tick, const std::string& detail)
      : std::runtime_error("replay diverged at tick " + std::to_string(tick) + ": " + detail), tick_(tick) {}
  long long tick() const { return tick_; }

 private:
  long long tick_;
};

struct ReplayResult {
  WorldState final_world;
  SessionMetrics metrics;
  SessionLog log;
};

/// Re-runs every recorded tick and checks each recomputed record against the log.
inline ReplayResult replay(const SessionLog& recorded, const ServerConfig& config, const Scenario& scenario) {
  TeleopPipeline pipeline(config, scenario);
  const LogHeader expected = pipeline.header();
  if (recorded.header().config_digest != expected.config_digest)
    throw LogError("log was recorded with a different configuration (digest " + recorded.header().config_digest +
                   ", current " + expected.config_digest + ")");
  if (recorded.header().scenario_digest != expected.scenario_digest)
    throw LogError("log was recorded against a different scenario");

  SessionLog log(expected);
  for (const LogRecord& r : recorded.records()) {
    TickOutput out = pipeline.tick(r.inbound);
    if (out.record != r) {
      const std::string detail = out.record.state_digest != r.state_digest ? "state digest mismatch" : "record mismatch";
      throw ReplayDivergence(r.tick, detail);
    }
    log.append(std::move(out.record));
  }
  return {pipeline.world(), compute_metrics(log, scenario), std::move(log)};
}

}  // namespace hat
