#pragma once

// A closed-loop stand-in for a human operator. It only sees what a console
// would see (the per-tick snapshot) and only acts through inbound messages:
// head poses every tick and press/release clicks.
//
// The operator aims at a point displaced from the true object by a fixed
// offset along the robot's initial heading. With the gripper's grasp radius
// smaller than that offset it cannot grasp unaided; it keeps re-aiming at the
// same wrong point until the budget runs out.
//
// Task script for single-placement scenarios with the day6 bindings:
//   Single -> robot control, Single -> calibrate, drive to the aim point,
//   Single -> arm, (Triple -> assist on), reach, pause until the arm is still,
//   Single -> wrist, close; on a miss reopen, Single -> drive and retry;
//   on a grasp drive back over the drop region and open.

#include "hat/hat.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <vector>

namespace hat::testing {

struct OperatorOptions {
  double aim_error_m = 0.1;
  bool use_assist = false;
  long long budget_ticks = 3000;
  int settle_min_ticks = 20;
  int settle_max_ticks = 200;
  double settle_step_m = 1e-4;  ///< end-effector motion per tick below which the arm counts as still
};

struct OperatorRun {
  bool completed = false;
  long long ticks = 0;  ///< completion tick, or the budget when not completed
  int grasp_attempts = 0;
  bool grasped = false;
  SessionLog log;
};

class ScriptedOperator {
 public:
  ScriptedOperator(const ServerConfig& cfg, const Scenario& scenario, OperatorOptions opt)
      : cfg_(cfg), opt_(opt) {
    const PlacementGoal& goal = scenario.placements.at(0);
    target_id_ = goal.object_id;
    drop_x_ = 0.5 * (goal.region.min.x() + goal.region.max.x());
    const double h0 = scenario.initial.robot.heading;
    aim_offset_ = Eigen::Vector3d(std::cos(h0), std::sin(h0), 0.0) * opt.aim_error_m;
    home_heading_ = h0;
  }

  int grasp_attempts() const { return attempts_; }
  bool grasped() const { return grasped_; }

  /// Messages for the tick that will run at server time `t_ms`, given the
  /// latest snapshot.
  std::vector<InboundMessage> act(const OutboundSnapshot& s, double t_ms) {
    ++ticks_;
    std::vector<InboundMessage> out;
    double pitch = 0.0;
    double yaw = 0.0;

    if (ticks_ < busy_until_) {
      // a click sequence is in flight; hold the head still
    } else {
      switch (phase_) {
        case Phase::Start:
          click(1);
          phase_ = Phase::WaitControl;
          break;
        case Phase::WaitControl:
          if (s.mode.mode == Mode::RobotControl) {
            click(1);
            phase_ = Phase::WaitCalibrated;
          }
          break;
        case Phase::WaitCalibrated:
          if (s.mode.calibrated) phase_ = Phase::AlignHeading;
          break;
        case Phase::AlignHeading: {
          const double err = normalize_angle(home_heading_ - s.robot.heading);
          if (std::abs(err) < 0.003) {
            phase_ = carrying() ? Phase::CarryDrive : Phase::Approach;
          } else {
            yaw = angle_for(std::clamp(2.0 * err, -1.0, 1.0), Actuator::BaseRotation, 0.01);
          }
          break;
        }
        case Phase::Approach: {
          const double err = along_heading(aim_point(s) - s.end_effector, s.robot.heading);
          if (std::abs(err) < 0.004) {
            click(1);
            phase_ = Phase::WaitArm;
          } else {
            pitch = angle_for(1.5 * err, Actuator::BaseTranslation, 0.01);
          }
          break;
        }
        case Phase::WaitArm:
          if (s.mode.submode == Submode::Arm) {
            if (opt_.use_assist && !s.mode.assist_enabled) {
              click(3);
              phase_ = Phase::WaitAssist;
            } else {
              phase_ = Phase::Reach;
            }
          }
          break;
        case Phase::WaitAssist:
          if (s.mode.assist_enabled) phase_ = Phase::Reach;
          break;
        case Phase::Reach: {
          const Eigen::Vector3d aim = to_base(aim_point(s), s.robot);
          const Eigen::Vector3d ee = end_effector_in_base(s.robot, cfg_.geometry);
          const double lift_err = aim.z() - ee.z();
          const double reach_err = ee.y() - aim.y();  // positive when the aim is further out
          if (std::abs(lift_err) < 0.004 && std::abs(reach_err) < 0.004) {
            phase_ = Phase::Settle;
            settle_ticks_ = 0;
          } else {
            pitch = angle_for(2.0 * lift_err, Actuator::Lift, 0.01);
            yaw = angle_for(2.0 * reach_err, Actuator::Extension, 0.01);
          }
          break;
        }
        case Phase::Settle: {
          ++settle_ticks_;
          const bool still = last_ee_ && (s.end_effector - *last_ee_).norm() < opt_.settle_step_m;
          if ((settle_ticks_ >= opt_.settle_min_ticks && still) || settle_ticks_ >= opt_.settle_max_ticks) {
            click(1);
            phase_ = Phase::WaitWrist;
          }
          break;
        }
        case Phase::WaitWrist:
          if (s.mode.submode == Submode::Wrist) phase_ = carrying() ? Phase::Open : Phase::Close;
          break;
        case Phase::Close:
          if (s.attached_id == target_id_) {
            ++attempts_;
            grasped_ = true;
            click(1);
            phase_ = Phase::WaitDrive;
          } else if (s.robot.gripper <= cfg_.geometry.gripper_range.min) {
            ++attempts_;
            phase_ = Phase::Reopen;
          } else {
            pitch = -cfg_.thresholds.t_high;
          }
          break;
        case Phase::Reopen:
          if (s.robot.gripper >= cfg_.geometry.gripper_range.max) {
            click(1);
            phase_ = Phase::WaitDrive;
          } else {
            pitch = cfg_.thresholds.t_high;
          }
          break;
        case Phase::WaitDrive:
          if (s.mode.submode == Submode::Drive) phase_ = Phase::AlignHeading;
          break;
        case Phase::CarryDrive: {
          const double err = along_heading(Eigen::Vector3d(drop_x_, 0.0, 0.0) - s.end_effector, s.robot.heading);
          if (std::abs(err) < 0.01) {
            click(1);
            phase_ = Phase::CarryToArm;
          } else {
            pitch = angle_for(1.5 * err, Actuator::BaseTranslation, 0.01);
          }
          break;
        }
        case Phase::CarryToArm:
          if (s.mode.submode == Submode::Arm) {
            click(1);
            phase_ = Phase::WaitWrist;
          }
          break;
        case Phase::Open:
          if (!s.attached_id) {
            phase_ = Phase::Done;
          } else {
            pitch = cfg_.thresholds.t_high;
          }
          break;
        case Phase::Done:
          break;
      }
    }

    last_ee_ = s.end_effector;
    out.push_back(HeadPoseMsg{0.0, pitch, yaw, t_ms});
    emit_clicks(out, t_ms);
    return out;
  }

 private:
  enum class Phase {
    Start, WaitControl, WaitCalibrated, AlignHeading, Approach, WaitArm, WaitAssist, Reach, Settle,
    WaitWrist, Close, Reopen, WaitDrive, CarryDrive, CarryToArm, Open, Done
  };

  bool carrying() const { return grasped_; }

  Eigen::Vector3d aim_point(const OutboundSnapshot& s) const {
    for (const auto& o : s.objects)
      if (o.id == target_id_) return o.position + aim_offset_;
    return s.end_effector;
  }

  static double along_heading(const Eigen::Vector3d& d, double heading) {
    return d.x() * std::cos(heading) + d.y() * std::sin(heading);
  }

  static Eigen::Vector3d to_base(const Eigen::Vector3d& p, const RobotState& r) {
    const double dx = p.x() - r.x;
    const double dy = p.y() - r.y;
    const double c = std::cos(r.heading);
    const double sn = std::sin(r.heading);
    return {c * dx + sn * dy, -sn * dx + c * dy, p.z()};
  }

  /// Head angle (deg from neutral) that asks for velocity v, at least `v_min`
  /// in magnitude so that small corrections still leave the deadzone.
  double angle_for(double v, Actuator a, double v_min) const {
    if (v == 0.0) return 0.0;
    const double vmax = cfg_.limits.max_for(a);
    const double mag = std::clamp(std::abs(v), v_min, vmax);
    const double k = vmax / (cfg_.thresholds.t_high - cfg_.thresholds.t_low);
    return std::copysign(cfg_.thresholds.t_low + mag / k, v);
  }

  /// Schedules n press/release pairs, 100 ms down and 100 ms apart.
  void click(int n) {
    const long long step = std::max<long long>(1, std::llround(100.0 / cfg_.period_ms()));
    long long at = ticks_ + 1;
    for (int i = 0; i < n; ++i) {
      clicks_.push_back({at, ClickAction::Press});
      clicks_.push_back({at + step, ClickAction::Release});
      at += 2 * step;
    }
    // leave the recognizer time to settle the sequence before acting again
    const long long settle = std::llround(cfg_.timing.sequence_settle_ms / cfg_.period_ms()) + 2;
    busy_until_ = at + settle;
  }

  void emit_clicks(std::vector<InboundMessage>& out, double t_ms) {
    while (!clicks_.empty() && clicks_.front().tick <= ticks_) {
      out.push_back(ClickMsg{clicks_.front().action, t_ms});
      clicks_.pop_front();
    }
  }

  struct ScheduledClick {
    long long tick;
    ClickAction action;
  };

  const ServerConfig& cfg_;
  OperatorOptions opt_;
  int target_id_ = 0;
  double drop_x_ = 0.0;
  double home_heading_ = 0.0;
  Eigen::Vector3d aim_offset_ = Eigen::Vector3d::Zero();
  Phase phase_ = Phase::Start;
  long long ticks_ = 0;
  long long busy_until_ = 0;
  int settle_ticks_ = 0;
  int attempts_ = 0;
  bool grasped_ = false;
  std::optional<Eigen::Vector3d> last_ee_;
  std::deque<ScheduledClick> clicks_;
};

inline OperatorRun run_operator(const ServerConfig& cfg, const Scenario& scenario, const OperatorOptions& opt) {
  TeleopPipeline pipeline(cfg, scenario);
  ScriptedOperator op(cfg, scenario, opt);
  OperatorRun run;
  run.log = SessionLog(pipeline.header());
  OutboundSnapshot snap = pipeline.snapshot();
  for (long long t = 1; t <= opt.budget_ticks; ++t) {
    const auto msgs = op.act(snap, static_cast<double>(t) * cfg.period_ms());
    TickOutput out = pipeline.tick(msgs);
    snap = std::move(out.snapshot);
    run.log.append(std::move(out.record));
    if (snap.complete) {
      run.completed = true;
      run.ticks = t;
      break;
    }
  }
  if (!run.completed) run.ticks = opt.budget_ticks;
  run.grasp_attempts = op.grasp_attempts();
  run.grasped = op.grasped();
  return run;
}

inline InputScript script_from_log(const SessionLog& log) {
  InputScript s;
  for (const auto& r : log.records()) s.ticks.push_back(r.inbound);
  return s;
}

/// Seeded random head poses, clicks, queries and resets.
inline InputScript random_script(long long ticks, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(-40.0, 40.0);
  std::uniform_int_distribution<int> pick(0, 99);
  InputScript s;
  bool pressed = false;
  for (long long t = 1; t <= ticks; ++t) {
    std::vector<InboundMessage> msgs;
    const double now = static_cast<double>(t) * 50.0;
    if (pick(rng) < 90) msgs.push_back(HeadPoseMsg{ang(rng), ang(rng), ang(rng), now});
    const int r = pick(rng);
    if (r < 6) {
      msgs.push_back(ClickMsg{pressed ? ClickAction::Release : ClickAction::Press, now});
      pressed = !pressed;
    } else if (r == 6 && pick(rng) < 5) {
      msgs.push_back(ResetMsg{});
    } else if (r == 7 && pick(rng) < 10) {
      msgs.push_back(QueryMsg{{"cup", "can", "towel"}});
    }
    s.ticks.push_back(std::move(msgs));
  }
  return s;
}

}  // namespace hat::testing
