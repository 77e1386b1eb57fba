#pragma once

// Click gesture recognition and the operational mode state machine.
//
// Three binding presets ship with the library (day1, day3, day6). They differ
// only in which gesture triggers which mode switch:
//
//   switch                      day1   day3   day6
//   idle -> robot control         3      1      1
//   idle -> cursor control        2      2+     3
//   any mode -> idle              3+     hold   hold
//   drive -> arm -> wrist         1      1      1
//   assist on <-> off             hold   2+     3

#include "hat/hat_mapping.hpp"

#include <algorithm>
#include <climits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hat {

// ---------------------------------------------------------------------------
// Gestures
// ---------------------------------------------------------------------------

enum class ClickAction { Press, Release };

struct ClickEvent {
  ClickAction action = ClickAction::Press;
  double timestamp_ms = 0.0;

  bool operator==(const ClickEvent&) const = default;
};

enum class GestureKind { Single, Double, Triple, MultiTwoPlus, Hold };

struct ClickGesture {
  GestureKind kind = GestureKind::Single;
  int count = 1;               ///< number of clicks; 0 for Hold
  double emitted_at_ms = 0.0;  ///< time at which the gesture became final

  bool operator==(const ClickGesture&) const = default;

  static ClickGesture clicks(int n, double at) {
    GestureKind k = n == 1 ? GestureKind::Single
                  : n == 2 ? GestureKind::Double
                  : n == 3 ? GestureKind::Triple
                           : GestureKind::MultiTwoPlus;
    return {k, n, at};
  }
  static ClickGesture hold(double at) { return {GestureKind::Hold, 0, at}; }
};

struct GestureTiming {
  double multi_click_gap_ms = 400.0;
  double hold_threshold_ms = 600.0;
  double sequence_settle_ms = 400.0;

  void validate() const {
    if (!(multi_click_gap_ms > 0 && hold_threshold_ms > 0 && sequence_settle_ms > 0))
      throw std::invalid_argument("gesture timing windows must be positive");
  }

  bool operator==(const GestureTiming&) const = default;
};

class GestureStreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incremental recognizer. Feed press/release events in time order and call
/// advance() with the current time so that settled sequences and holds are
/// emitted without waiting for the next event.
class GestureRecognizer {
 public:
  explicit GestureRecognizer(GestureTiming timing = {}) : timing_(timing) {}

  std::vector<ClickGesture> feed(const ClickEvent& ev) {
    std::vector<ClickGesture> out;
    if (ev.timestamp_ms < clock_ms_) {
      reset();
      throw GestureStreamError("click events out of order");
    }
    settle(ev.timestamp_ms, out);
    clock_ms_ = ev.timestamp_ms;

    if (ev.action == ClickAction::Press) {
      if (pressed_) {
        reset();
        throw GestureStreamError("press while already pressed");
      }
      // a press after the gap closes the pending sequence even if settle > gap
      if (count_ > 0 && ev.timestamp_ms - last_release_ms_ > timing_.multi_click_gap_ms) {
        out.push_back(ClickGesture::clicks(count_, ev.timestamp_ms));
        count_ = 0;
      }
      pressed_ = true;
      press_ms_ = ev.timestamp_ms;
      hold_emitted_ = false;
      return out;
    }

    if (!pressed_) {
      reset();
      throw GestureStreamError("release without press");
    }
    pressed_ = false;
    if (!hold_emitted_) {
      if (ev.timestamp_ms - press_ms_ >= timing_.hold_threshold_ms) {
        emit_hold(out);
      } else {
        ++count_;
        last_release_ms_ = ev.timestamp_ms;
      }
    }
    hold_emitted_ = false;
    return out;
  }

  std::vector<ClickGesture> advance(double now_ms) {
    std::vector<ClickGesture> out;
    if (now_ms < clock_ms_) return out;
    settle(now_ms, out);
    clock_ms_ = now_ms;
    return out;
  }

  void reset() {
    pressed_ = false;
    hold_emitted_ = false;
    count_ = 0;
  }

  bool idle() const { return !pressed_ && count_ == 0; }

 private:
  void emit_hold(std::vector<ClickGesture>& out) {
    // a hold cancels any multi-click sequence in progress
    count_ = 0;
    hold_emitted_ = true;
    out.push_back(ClickGesture::hold(press_ms_ + timing_.hold_threshold_ms));
  }

  void settle(double now_ms, std::vector<ClickGesture>& out) {
    if (pressed_) {
      if (!hold_emitted_ && now_ms - press_ms_ >= timing_.hold_threshold_ms) emit_hold(out);
      return;
    }
    if (count_ == 0) return;
    const double deadline = last_release_ms_ + timing_.sequence_settle_ms;
    if (now_ms >= deadline) {
      out.push_back(ClickGesture::clicks(count_, deadline));
      count_ = 0;
    }
  }

  GestureTiming timing_;
  bool pressed_ = false;
  bool hold_emitted_ = false;
  int count_ = 0;
  double press_ms_ = 0.0;
  double last_release_ms_ = 0.0;
  double clock_ms_ = -1e300;
};

/// Classifies a complete, finite event stream. Pending sequences are flushed at
/// the end as if enough silence followed.
inline std::vector<ClickGesture> classify_gestures(std::span<const ClickEvent> events, const GestureTiming& timing) {
  GestureRecognizer rec(timing);
  std::vector<ClickGesture> out;
  double last = 0.0;
  for (const ClickEvent& ev : events) {
    auto g = rec.feed(ev);
    out.insert(out.end(), g.begin(), g.end());
    last = ev.timestamp_ms;
  }
  auto tail = rec.advance(last + std::max(timing.sequence_settle_ms, timing.hold_threshold_ms));
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

// ---------------------------------------------------------------------------
// Mode state
// ---------------------------------------------------------------------------

enum class Mode { Idle, RobotControl, CursorControl };
enum class CursorStyle { Velocity, Position };

struct ModeState {
  Mode mode = Mode::Idle;
  Submode submode = Submode::Drive;
  bool calibrated = false;
  bool assist_enabled = false;
  CursorStyle cursor_style = CursorStyle::Velocity;

  bool in_control_mode() const { return mode != Mode::Idle; }
  bool operator==(const ModeState&) const = default;
};

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Idle: return "idle";
    case Mode::RobotControl: return "robot_control";
    case Mode::CursorControl: return "cursor_control";
  }
  return "?";
}

inline std::string_view to_string(Submode s) {
  switch (s) {
    case Submode::Drive: return "drive";
    case Submode::Arm: return "arm";
    case Submode::Wrist: return "wrist";
  }
  return "?";
}

inline std::string_view to_string(CursorStyle s) { return s == CursorStyle::Velocity ? "velocity" : "position"; }

// ---------------------------------------------------------------------------
// Bindings
// ---------------------------------------------------------------------------

enum class BindingScope { Idle, RobotControl, CursorControl, Any };
enum class BindingAction { EnterRobotControl, EnterCursorControl, GoIdle, CycleSubmode, ToggleAssist };

/// A gesture pattern: hold, or a click count in [min_count, max_count].
struct GesturePattern {
  bool hold = false;
  int min_count = 1;
  int max_count = 1;

  static GesturePattern exactly(int n) { return {false, n, n}; }
  static GesturePattern at_least(int n) { return {false, n, INT_MAX}; }
  static GesturePattern held() { return {true, 0, 0}; }

  bool matches(const ClickGesture& g) const {
    if (hold) return g.kind == GestureKind::Hold;
    return g.kind != GestureKind::Hold && g.count >= min_count && g.count <= max_count;
  }

  /// Smaller is more specific.
  long long width() const { return hold ? 0 : static_cast<long long>(max_count) - min_count; }

  bool overlaps(const GesturePattern& o) const {
    if (hold || o.hold) return hold == o.hold;
    return min_count <= o.max_count && o.min_count <= max_count;
  }

  bool operator==(const GesturePattern&) const = default;
};

struct Binding {
  BindingScope scope = BindingScope::Any;
  GesturePattern pattern;
  BindingAction action = BindingAction::GoIdle;

  bool operator==(const Binding&) const = default;
};

struct ClickBindings {
  std::string id = "day6";
  std::vector<Binding> bindings;

  /// Rejects two equally specific bindings that could fire for the same gesture in the same scope.
  void validate() const {
    for (std::size_t i = 0; i < bindings.size(); ++i)
      for (std::size_t j = i + 1; j < bindings.size(); ++j) {
        const Binding& a = bindings[i];
        const Binding& b = bindings[j];
        if (a.scope == b.scope && a.pattern.overlaps(b.pattern) && a.pattern.width() == b.pattern.width())
          throw std::invalid_argument("click bindings: ambiguous bindings in one mode for preset '" + id + "'");
      }
  }

  bool operator==(const ClickBindings&) const = default;

  static ClickBindings day1() {
    return {"day1",
            {{BindingScope::Idle, GesturePattern::exactly(3), BindingAction::EnterRobotControl},
             {BindingScope::Idle, GesturePattern::exactly(2), BindingAction::EnterCursorControl},
             {BindingScope::Any, GesturePattern::at_least(3), BindingAction::GoIdle},
             {BindingScope::RobotControl, GesturePattern::exactly(1), BindingAction::CycleSubmode},
             {BindingScope::RobotControl, GesturePattern::held(), BindingAction::ToggleAssist}}};
  }

  static ClickBindings day3() {
    return {"day3",
            {{BindingScope::Idle, GesturePattern::exactly(1), BindingAction::EnterRobotControl},
             {BindingScope::Idle, GesturePattern::at_least(2), BindingAction::EnterCursorControl},
             {BindingScope::Any, GesturePattern::held(), BindingAction::GoIdle},
             {BindingScope::RobotControl, GesturePattern::exactly(1), BindingAction::CycleSubmode},
             {BindingScope::RobotControl, GesturePattern::at_least(2), BindingAction::ToggleAssist}}};
  }

  static ClickBindings day6() {
    return {"day6",
            {{BindingScope::Idle, GesturePattern::exactly(1), BindingAction::EnterRobotControl},
             {BindingScope::Idle, GesturePattern::exactly(3), BindingAction::EnterCursorControl},
             {BindingScope::Any, GesturePattern::held(), BindingAction::GoIdle},
             {BindingScope::RobotControl, GesturePattern::exactly(1), BindingAction::CycleSubmode},
             {BindingScope::RobotControl, GesturePattern::exactly(3), BindingAction::ToggleAssist}}};
  }

  static ClickBindings preset(std::string_view id) {
    if (id == "day1") return day1();
    if (id == "day3") return day3();
    if (id == "day6") return day6();
    throw std::invalid_argument("unknown bindings preset '" + std::string(id) + "' (expected day1|day3|day6)");
  }

  /// Most specific binding for the gesture in the given mode: narrowest pattern
  /// first, then mode-specific scope over Any.
  std::optional<BindingAction> lookup(Mode mode, const ClickGesture& g) const {
    const BindingScope scope = mode == Mode::Idle           ? BindingScope::Idle
                               : mode == Mode::RobotControl ? BindingScope::RobotControl
                                                            : BindingScope::CursorControl;
    const Binding* best = nullptr;
    auto better = [&](const Binding& b) {
      if (!best) return true;
      if (b.pattern.width() != best->pattern.width()) return b.pattern.width() < best->pattern.width();
      return best->scope == BindingScope::Any && b.scope != BindingScope::Any;
    };
    for (const Binding& b : bindings) {
      if (b.scope != scope && b.scope != BindingScope::Any) continue;
      if (!b.pattern.matches(g)) continue;
      if (better(b)) best = &b;
    }
    if (!best) return std::nullopt;
    return best->action;
  }
};

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

enum class EffectKind { Announce, CalibrateNow, IgnoredGesture, CursorClick };

struct Effect {
  EffectKind kind = EffectKind::Announce;
  std::string text;

  bool operator==(const Effect&) const = default;
};

struct TransitionResult {
  ModeState state;
  std::vector<Effect> effects;
};

inline std::string describe(const ModeState& s) {
  switch (s.mode) {
    case Mode::Idle: return "idle";
    case Mode::RobotControl:
      return std::string(to_string(s.submode)) + " mode" + (s.assist_enabled ? ", assist on" : "");
    case Mode::CursorControl: return "cursor control";
  }
  return "?";
}

inline std::string_view to_string(const ClickGesture& g) {
  switch (g.kind) {
    case GestureKind::Single: return "single";
    case GestureKind::Double: return "double";
    case GestureKind::Triple: return "triple";
    case GestureKind::MultiTwoPlus: return "multi";
    case GestureKind::Hold: return "hold";
  }
  return "?";
}

inline TransitionResult transition(const ModeState& state, const ClickGesture& gesture, const ClickBindings& bindings) {
  TransitionResult r{state, {}};

  // Entering a control mode requires one click to capture the reference orientation.
  if (state.in_control_mode() && !state.calibrated && gesture.kind == GestureKind::Single) {
    r.state.calibrated = true;
    r.effects.push_back({EffectKind::CalibrateNow, {}});
    r.effects.push_back({EffectKind::Announce, describe(r.state) + " initialized"});
    return r;
  }

  const auto action = bindings.lookup(state.mode, gesture);
  if (!action) {
    if (state.mode == Mode::CursorControl && gesture.kind == GestureKind::Single) {
      r.effects.push_back({EffectKind::CursorClick, {}});
    } else {
      r.effects.push_back({EffectKind::IgnoredGesture, std::string(to_string(gesture))});
    }
    return r;
  }

  switch (*action) {
    case BindingAction::EnterRobotControl:
      r.state = ModeState{Mode::RobotControl, Submode::Drive, false, false, state.cursor_style};
      break;
    case BindingAction::EnterCursorControl:
      r.state = ModeState{Mode::CursorControl, Submode::Drive, false, false, state.cursor_style};
      break;
    case BindingAction::GoIdle:
      r.state = ModeState{Mode::Idle, Submode::Drive, false, false, state.cursor_style};
      break;
    case BindingAction::CycleSubmode:
      r.state.submode = state.submode == Submode::Drive ? Submode::Arm
                        : state.submode == Submode::Arm ? Submode::Wrist
                                                        : Submode::Drive;
      break;
    case BindingAction::ToggleAssist:
      r.state.assist_enabled = !state.assist_enabled;
      r.effects.push_back({EffectKind::Announce, r.state.assist_enabled ? "driver assistance on" : "driver assistance off"});
      return r;
  }
  if (!(r.state == state)) r.effects.push_back({EffectKind::Announce, describe(r.state)});
  return r;
}

}  // namespace hat
