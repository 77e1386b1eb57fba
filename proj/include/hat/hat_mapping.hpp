#pragma once

// Head orientation -> actuator velocity and cursor commands.
//
// Every axis is processed relative to the orientation captured at calibration.
// Differences are taken on the circle, so a head at 179 deg calibrated at
// -179 deg is 2 deg away, not 358.

#include "hat/kinematics.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace hat {

struct OrientationSample {
  double roll = 0.0;   ///< deg
  double pitch = 0.0;  ///< deg
  double yaw = 0.0;    ///< deg
  double timestamp_ms = 0.0;

  bool operator==(const OrientationSample&) const = default;
};

struct Calibration {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  bool operator==(const Calibration&) const = default;
};

struct ThresholdConfig {
  double t_low = 10.0;          ///< deadzone half-width (deg)
  double t_high = 35.0;         ///< saturation angle (deg)
  double cursor_t_high = 12.0;  ///< position-control half range (deg)

  void validate() const {
    if (!(t_low > 0.0 && t_low < t_high)) throw std::invalid_argument("thresholds: require 0 < t_low < t_high");
    if (!(cursor_t_high > 0.0)) throw std::invalid_argument("thresholds: cursor_t_high must be positive");
  }

  bool operator==(const ThresholdConfig&) const = default;
};

enum class Actuator { BaseTranslation, BaseRotation, Lift, Extension, Wrist, Gripper };

inline constexpr std::array<Actuator, 6> kAllActuators = {
    Actuator::BaseTranslation, Actuator::BaseRotation, Actuator::Lift,
    Actuator::Extension,       Actuator::Wrist,        Actuator::Gripper};

struct ActuatorLimits {
  double base_translation = 0.3;  ///< m/s
  double base_rotation = 0.3;     ///< rad/s
  double lift = 0.26;             ///< m/s
  double extension = 0.13;        ///< m/s
  double wrist = 0.3;             ///< rad/s
  double gripper = 2.0;           ///< rad/s

  double max_for(Actuator a) const {
    switch (a) {
      case Actuator::BaseTranslation: return base_translation;
      case Actuator::BaseRotation: return base_rotation;
      case Actuator::Lift: return lift;
      case Actuator::Extension: return extension;
      case Actuator::Wrist: return wrist;
      case Actuator::Gripper: return gripper;
    }
    return 0.0;
  }

  void validate() const {
    for (Actuator a : kAllActuators)
      if (!(max_for(a) > 0.0)) throw std::invalid_argument("actuator limits must be positive");
  }

  bool operator==(const ActuatorLimits&) const = default;
};

inline double& component(JointVelocityCommand& cmd, Actuator a) {
  switch (a) {
    case Actuator::BaseTranslation: return cmd.base_forward;
    case Actuator::BaseRotation: return cmd.base_rotation;
    case Actuator::Lift: return cmd.lift;
    case Actuator::Extension: return cmd.extension;
    case Actuator::Wrist: return cmd.wrist;
    case Actuator::Gripper: return cmd.gripper;
  }
  throw std::logic_error("unknown actuator");
}

inline double component(const JointVelocityCommand& cmd, Actuator a) {
  return component(const_cast<JointVelocityCommand&>(cmd), a);
}

/// Clamps each component of the command to its actuator maximum.
inline JointVelocityCommand saturate(JointVelocityCommand cmd, const ActuatorLimits& limits) {
  for (Actuator a : kAllActuators) {
    double& c = component(cmd, a);
    const double m = limits.max_for(a);
    c = std::clamp(c, -m, m);
  }
  return cmd;
}

enum class HeadAxis { Roll, Pitch, Yaw };

inline double axis_angle(const OrientationSample& s, HeadAxis axis) {
  switch (axis) {
    case HeadAxis::Roll: return s.roll;
    case HeadAxis::Pitch: return s.pitch;
    case HeadAxis::Yaw: return s.yaw;
  }
  return 0.0;
}

inline double axis_angle(const Calibration& c, HeadAxis axis) {
  switch (axis) {
    case HeadAxis::Roll: return c.roll;
    case HeadAxis::Pitch: return c.pitch;
    case HeadAxis::Yaw: return c.yaw;
  }
  return 0.0;
}

enum class Submode { Drive, Arm, Wrist };

struct AxisBinding {
  HeadAxis axis = HeadAxis::Pitch;
  Actuator actuator = Actuator::BaseTranslation;
  double sign = 1.0;

  bool operator==(const AxisBinding&) const = default;
};

/// Two head axes drive two actuators in each robot submode.
struct AxisAssignment {
  std::string id = "pitch-yaw";
  std::array<AxisBinding, 2> drive{};
  std::array<AxisBinding, 2> arm{};
  std::array<AxisBinding, 2> wrist{};

  const std::array<AxisBinding, 2>& for_submode(Submode m) const {
    switch (m) {
      case Submode::Drive: return drive;
      case Submode::Arm: return arm;
      case Submode::Wrist: return wrist;
    }
    return drive;
  }

  void validate() const {
    for (const auto* pair : {&drive, &arm, &wrist}) {
      if ((*pair)[0].axis == (*pair)[1].axis)
        throw std::invalid_argument("axis assignment: a head axis drives two actuators in one submode");
      if ((*pair)[0].actuator == (*pair)[1].actuator)
        throw std::invalid_argument("axis assignment: an actuator is bound twice in one submode");
    }
  }

  bool operator==(const AxisAssignment&) const = default;

  /// Pitch tilts forward/back, yaw turns left/right.
  static AxisAssignment pitch_yaw() {
    AxisAssignment a;
    a.id = "pitch-yaw";
    a.drive = {{{HeadAxis::Pitch, Actuator::BaseTranslation, 1.0}, {HeadAxis::Yaw, Actuator::BaseRotation, 1.0}}};
    a.arm = {{{HeadAxis::Pitch, Actuator::Lift, 1.0}, {HeadAxis::Yaw, Actuator::Extension, 1.0}}};
    a.wrist = {{{HeadAxis::Pitch, Actuator::Gripper, 1.0}, {HeadAxis::Yaw, Actuator::Wrist, 1.0}}};
    return a;
  }

  /// Same actuators, with the roll axis standing in for yaw.
  static AxisAssignment pitch_roll() {
    AxisAssignment a = pitch_yaw();
    a.id = "pitch-roll";
    for (auto* pair : {&a.drive, &a.arm, &a.wrist})
      for (auto& b : *pair)
        if (b.axis == HeadAxis::Yaw) b.axis = HeadAxis::Roll;
    return a;
  }

  static AxisAssignment preset(std::string_view id) {
    if (id == "pitch-yaw") return pitch_yaw();
    if (id == "pitch-roll") return pitch_roll();
    throw std::invalid_argument("unknown axis preset '" + std::string(id) + "' (expected pitch-yaw|pitch-roll)");
  }
};

struct CursorLimits {
  double max_speed = 600.0;  ///< screen units / s
  double width = 1920.0;
  double height = 1080.0;

  bool operator==(const CursorLimits&) const = default;
};

class NotCalibratedError : public std::runtime_error {
 public:
  NotCalibratedError() : std::runtime_error("head orientation not initialized") {}
};

inline Calibration calibrate(const OrientationSample& sample) {
  return {sample.roll, sample.pitch, sample.yaw};
}

/// Signed shortest arc from `from` to `to`, in degrees, in [-180, 180).
inline double shortest_arc_deg(double to, double from) {
  double d = std::fmod(to - from, 360.0);
  if (d < -180.0) d += 360.0;
  if (d >= 180.0) d -= 360.0;
  return d;
}

/// Deadzone / proportional band / saturation mapping for one head axis.
inline double axis_velocity(double theta, double theta_init, double v_max, const ThresholdConfig& thr) {
  const double delta = shortest_arc_deg(theta, theta_init);
  const double mag = std::abs(delta);
  if (mag < thr.t_low) return 0.0;
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  if (mag > thr.t_high) return sign * v_max;
  const double k = v_max / (thr.t_high - thr.t_low);
  return sign * k * (mag - thr.t_low);
}

inline JointVelocityCommand map_to_command(const OrientationSample& sample, const std::optional<Calibration>& cal,
                                           Submode submode, const AxisAssignment& assign,
                                           const ActuatorLimits& limits, const ThresholdConfig& thr) {
  if (!cal) throw NotCalibratedError();
  JointVelocityCommand cmd;
  for (const AxisBinding& b : assign.for_submode(submode)) {
    const double v = axis_velocity(axis_angle(sample, b.axis), axis_angle(*cal, b.axis),
                                   limits.max_for(b.actuator), thr);
    component(cmd, b.actuator) = b.sign * v;
  }
  return cmd;
}

struct CursorVelocity {
  double vx = 0.0;
  double vy = 0.0;
};

inline CursorVelocity cursor_velocity(const OrientationSample& sample, const std::optional<Calibration>& cal,
                                      const CursorLimits& limits, const ThresholdConfig& thr) {
  if (!cal) throw NotCalibratedError();
  return {axis_velocity(sample.yaw, cal->yaw, limits.max_speed, thr),
          axis_velocity(sample.pitch, cal->pitch, limits.max_speed, thr)};
}

/// Linear interpolation of one axis onto [p_low, p_high] across +-cursor_t_high, clamped.
inline double cursor_axis_position(double theta, double theta_init, double p_low, double p_high,
                                   const ThresholdConfig& thr) {
  const double delta = shortest_arc_deg(theta, theta_init);
  const double span = 2.0 * thr.cursor_t_high;
  const double p = p_low + (delta + thr.cursor_t_high) * (p_high - p_low) / span;
  return std::clamp(p, p_low, p_high);
}

struct CursorPosition {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const CursorPosition&) const = default;
};

inline CursorPosition cursor_position(const OrientationSample& sample, const std::optional<Calibration>& cal,
                                      const CursorLimits& screen, const ThresholdConfig& thr) {
  if (!cal) throw NotCalibratedError();
  return {cursor_axis_position(sample.yaw, cal->yaw, 0.0, screen.width, thr),
          cursor_axis_position(sample.pitch, cal->pitch, 0.0, screen.height, thr)};
}

/// Optional exponential smoothing of dispatched commands. factor = 0 disables it;
/// otherwise out = factor * previous + (1 - factor) * input.
class CommandSmoother {
 public:
  explicit CommandSmoother(double factor = 0.0) : factor_(std::clamp(factor, 0.0, 1.0)) {}

  JointVelocityCommand apply(const JointVelocityCommand& in) {
    if (factor_ == 0.0) {
      last_ = in;
      return in;
    }
    for (Actuator a : kAllActuators)
      component(last_, a) = factor_ * component(last_, a) + (1.0 - factor_) * component(in, a);
    return last_;
  }

  void reset() { last_ = {}; }

 private:
  double factor_;
  JointVelocityCommand last_{};
};

}  // namespace hat
