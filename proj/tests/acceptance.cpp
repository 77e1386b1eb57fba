// Acceptance gate. Runs each criterion at its stated tolerance and time limit
// and prints one PASS/FAIL line per criterion. Exit status is nonzero when any
// criterion fails.

#include "oracles.hpp"
#include "support/scripted_operator.hpp"

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace hat;

namespace {

/// Collects failed checks; keeps the first few messages.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (++failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os << what << ": got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, os.str());
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    return failures_ > 3 ? messages_ + " (+" + std::to_string(failures_ - 3) + " more)" : messages_;
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

const RobotGeometry kGeom;
const ThresholdConfig kThr;
const ActuatorLimits kLimits;

void mapping_table(Checks& c) {
  for (Actuator a : kAllActuators) {
    const double vmax = kLimits.max_for(a);
    for (double theta_i : {0.0, 27.0, -64.5}) {
      const auto f = [&](double d) { return axis_velocity(theta_i + d, theta_i, vmax, kThr); };
      for (double s : {1.0, -1.0}) {
        const std::string at = "actuator " + std::to_string(static_cast<int>(a)) + " offset ";
        c.near(f(s * 5.0), 0.0, 1e-9, at + "5");
        c.near(f(s * 10.0), 0.0, 1e-9, at + "10");
        c.near(f(s * 22.5), s * vmax / 2, 1e-9, at + "22.5");
        c.near(f(s * 35.0), s * vmax, 1e-9, at + "35");
        c.near(f(s * 60.0), s * vmax, 1e-9, at + "60");
      }
    }
  }
  c.near(axis_velocity(22.5, 0.0, kLimits.base_translation, kThr), 0.15, 1e-9, "base 22.5");
  c.near(axis_velocity(-35.0, 0.0, kLimits.base_translation, kThr), -0.3, 1e-9, "base -35");
}

void mapping_properties(Checks& c) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ti(-150.0, 150.0), d(0.0, 90.0);
  for (Actuator a : kAllActuators) {
    const double vmax = kLimits.max_for(a);
    const double k_a = vmax / (kThr.t_high - kThr.t_low);
    for (int i = 0; i < 10000 / 6 + 1; ++i) {
      const double theta_i = ti(rng);
      const double x = d(rng), y = d(rng);
      const double lo = std::min(x, y), hi = std::max(x, y);
      const double up = axis_velocity(theta_i + hi, theta_i, vmax, kThr);
      // theta_i + hi and theta_i - hi round differently, so oddness holds to rounding
      c.near(up, -axis_velocity(theta_i - hi, theta_i, vmax, kThr), 1e-12, "odd about theta_i");
      c.expect(axis_velocity(theta_i + lo, theta_i, vmax, kThr) <= up, "monotone");
      c.expect(axis_velocity(theta_i - lo, theta_i, vmax, kThr) >= -up, "monotone below");
      c.expect(std::abs(up) <= vmax, "saturation bound");
      c.near(up, oracle::velocity(theta_i + hi, theta_i, vmax), 1e-12, "piecewise oracle");
    }
    for (double theta_i : {0.0, 170.0, -95.0}) {
      double prev = axis_velocity(theta_i - 90.0, theta_i, vmax, kThr);
      for (int j = 1; j <= 18000; ++j) {
        const double v = axis_velocity(theta_i - 90.0 + 0.01 * j, theta_i, vmax, kThr);
        c.expect(std::abs(v - prev) < 2 * k_a * 0.01, "continuity");
        prev = v;
      }
    }
  }
}

void cursor_position_check(Checks& c) {
  const CursorLimits screen;
  for (double theta_i : {0.0, 15.0, -40.0}) {
    const auto x = [&](double d) { return cursor_axis_position(theta_i + d, theta_i, 0.0, screen.width, kThr); };
    c.near(x(0.0), screen.width / 2, 1e-9, "midpoint");
    c.near(x(12.0), screen.width, 1e-9, "high edge");
    c.near(x(-12.0), 0.0, 1e-9, "low edge");
    c.expect(x(20.0) == screen.width && x(-90.0) == 0.0, "clamped outside");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-12.0, 12.0);
    for (int i = 0; i < 500; ++i) {
      const double a = d(rng), b = d(rng), m = d(rng);
      // (a, x(a)), (b, x(b)), (m, x(m)) lie on one line
      const double cross = (b - a) * (x(m) - x(a)) - (m - a) * (x(b) - x(a));
      c.expect(std::abs(cross) / screen.width <= 1e-9, "collinear");
      c.near(x(m), oracle::cursor(theta_i + m, theta_i, 0.0, screen.width), 1e-9, "cursor oracle");
    }
  }
  const Calibration cal{0.0, 0.0, 0.0};
  const auto p = cursor_position({0.0, 6.0, -6.0, 0.0}, cal, screen, kThr);
  c.near(p.y, screen.height * 0.75, 1e-9, "pitch axis three quarters");
  c.near(p.x, screen.width * 0.25, 1e-9, "yaw axis one quarter");
}

std::vector<GoalCandidate> goals_at(const std::vector<double>& d) {
  std::vector<GoalCandidate> g;
  for (std::size_t i = 0; i < d.size(); ++i) g.push_back({static_cast<int>(i + 1), "g", {d[i], 0.0, 0.0}});
  return g;
}

void intent_math(Checks& c) {
  const AssistConfig cfg;
  const EndEffectorPose origin;
  const auto e = infer_intent(goals_at({0.1, 0.3}), origin, cfg);
  c.near(e.probabilities.at(0).p, 2.0 / 3.0, 1e-12, "P1");
  c.near(e.probabilities.at(1).p, 0.4, 1e-12, "P2");
  c.near(e.confidence, 4.0 / 15.0, 1e-12, "alpha");
  c.expect(e.g_star == 1, "g* nearest");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 5.0);
  std::uniform_int_distribution<int> n(1, 6);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> dist(static_cast<std::size_t>(n(rng)));
    for (double& x : dist) x = d(rng);
    const auto est = infer_intent(goals_at(dist), origin, cfg);
    c.expect(est.confidence >= 0.0 && est.confidence <= 1.0, "alpha in [0, 1]");
    c.near(est.confidence, oracle::intent(dist).alpha, 1e-12, "alpha oracle");
    const double same = d(rng);
    c.expect(infer_intent(goals_at({same, same, same + 1.0}), origin, cfg).confidence == 0.0, "equidistant alpha 0");
  }
  double prev = 0.0;
  for (double dist = 1.0; dist > 1e-15; dist /= 10.0) {
    const double p = infer_intent(goals_at({dist}), origin, cfg).probabilities[0].p;
    c.expect(p > prev && p <= 1.0, "P increases as d shrinks");
    prev = p;
  }
  c.near(prev, 1.0, 1e-12, "d -> 0 gives P -> 1");
}

void jacobian_check(Checks& c) {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RobotState s = oracle::random_state(rng, kGeom);
    worst = std::max(worst, (jacobian(s, kGeom) - oracle::numeric_jacobian(s, kGeom, 1e-5)).cwiseAbs().maxCoeff());
  }
  c.expect(worst < 1e-6, "finite difference error " + std::to_string(worst));
  double penrose = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Jacobian J = oracle::random_full_rank(rng);
    penrose = std::max(penrose, oracle::penrose_residual(J, damped_pseudo_inverse(J, 0.0)));
  }
  c.expect(penrose < 1e-9, "Penrose residual " + std::to_string(penrose));
}

void mask_guarantee(Checks& c) {
  const AssistConfig cfg;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> n(1, 4), coin(0, 2);
  for (int i = 0; i < 10000; ++i) {
    const RobotState s = oracle::random_state(rng, kGeom);
    const EndEffectorPose ee = forward_kinematics(s, kGeom);
    std::vector<GoalCandidate> goals;
    for (int k = n(rng); k > 0; --k)
      goals.push_back({k, "g", ee.position + Eigen::Vector3d(2 * u(rng), 2 * u(rng), 0.5 * u(rng))});
    const IntentEstimate intent = infer_intent(goals, ee, cfg);
    JointVelocityCommand u_h;
    for (Actuator a : kAllActuators)
      component(u_h, a) = coin(rng) == 0 ? 0.0 : 1.5 * kLimits.max_for(a) * u(rng);

    const Vector5 u_a = assistance(s, *intent.goal_position, u_h.joints(), cfg, kGeom);
    c.expect(u_a[0] == 0.0 && u_a[3] == 0.0 && u_a[4] == 0.0, "masked rows of u_a are zero");
    const JointVelocityCommand out = assist_command(s, intent, u_h, cfg, kGeom, kLimits);
    const JointVelocityCommand clamped = saturate(u_h, kLimits);
    c.expect(out.base_forward == clamped.base_forward && out.extension == clamped.extension &&
                 out.wrist == clamped.wrist && out.gripper == clamped.gripper,
             "masked actuators carry only the operator command");
    for (Actuator a : kAllActuators)
      c.expect(std::abs(component(out, a)) <= kLimits.max_for(a), "blended output within limits");

    IntentEstimate tied = intent;
    tied.confidence = 0.0;
    const JointVelocityCommand pass = assist_command(s, tied, u_h, cfg, kGeom, kLimits);
    c.expect(std::memcmp(&pass, &u_h, sizeof u_h) == 0, "alpha 0 passes u_h bitwise");
  }
}

void assist_convergence(Checks& c) {
  // single goal just beyond the gripper: 7.6 deg off the current bearing, 0.22 m higher
  const AssistConfig cfg;
  RobotState s;
  s.extension = 0.44;
  s.lift = 0.5;
  const Eigen::Vector3d goal(0.1, -0.75, 0.72);
  const GoalCandidate g{1, "can", goal};
  auto errors = [&](const RobotState& r) {
    const Eigen::Vector3d ee = forward_kinematics(r, kGeom).position;
    const double bearing = std::abs(normalize_angle(std::atan2(ee.y() - r.y, ee.x() - r.x) -
                                                    std::atan2(goal.y() - r.y, goal.x() - r.x)));
    return std::pair{std::abs(goal.z() - ee.z()), bearing * 180.0 / M_PI};
  };
  auto [lift0, bearing0] = errors(s);
  c.expect(bearing0 > 5.0 && lift0 > 0.1, "scenario starts away from the goal");
  int reached = -1;
  for (int t = 1; t <= 600; ++t) {
    const IntentEstimate intent = infer_intent(std::span(&g, 1), forward_kinematics(s, kGeom), cfg);
    s = integrate(s, assist_command(s, intent, {}, cfg, kGeom, kLimits), 0.05, kGeom);
    const auto [lift, bearing] = errors(s);
    c.expect(lift < lift0 || lift == 0.0, "lift error decreases at tick " + std::to_string(t));
    c.expect(bearing < bearing0 || bearing == 0.0, "bearing error decreases at tick " + std::to_string(t));
    lift0 = lift;
    bearing0 = bearing;
    if (reached < 0 && lift < 0.005 && bearing < 0.5) reached = t;
  }
  c.expect(reached > 0, "within 5 mm / 0.5 deg by tick 600");
}

void mode_tables(Checks& c) {
  using oracle::G;
  for (const std::string preset : {"day1", "day3", "day6"}) {
    const ClickBindings b = ClickBindings::preset(preset);
    for (const ModeState& s : oracle::all_states()) {
      for (G g : {G::One, G::Two, G::Three, G::Four, G::Hold}) {
        const TransitionResult r = transition(s, oracle::gesture(g), b);
        c.expect(r.state == oracle::expected_next(preset, s, g),
                 preset + " " + describe(s) + " gesture " + std::to_string(static_cast<int>(g)));
      }
      // Idle is reachable from every state, in one gesture
      const ClickGesture idle = preset == "day1" ? ClickGesture::clicks(4, 0) : ClickGesture::hold(0);
      c.expect(transition(s, idle, b).state.mode == Mode::Idle, preset + " idle from " + describe(s));
    }
    for (Mode m : {Mode::RobotControl, Mode::CursorControl}) {
      const ModeState s{m, Submode::Drive, false, false};
      const TransitionResult r = transition(s, ClickGesture::clicks(1, 0), b);
      c.expect(r.state.calibrated && r.state.mode == m && r.state.submode == Submode::Drive,
               preset + " calibration click consumed");
      c.expect(!r.effects.empty() && r.effects[0].kind == EffectKind::CalibrateNow, preset + " calibrate effect");
    }
  }
}

void determinism(Checks& c) {
  const ServerConfig cfg;
  const Scenario scenario = load_scenario("two_cups");
  const auto recorded = run_headless(cfg, scenario, hat::testing::random_script(5000, 2024));
  c.expect(recorded.log.records().size() == 5000, "5000 records");
  std::stringstream file;
  recorded.log.write(file);
  const SessionLog loaded = read_session_log(file);
  const auto again = run_headless(cfg, scenario, hat::testing::script_from_log(loaded));
  const auto& a = recorded.log.records();
  const auto& b = again.log.records();
  c.expect(a.size() == b.size(), "same record count");
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    c.expect(serialize(a[i]) == serialize(b[i]), "record " + std::to_string(i + 1) + " bytes differ");
  c.expect(world_digest(recorded.final_world) == world_digest(again.final_world), "final world digest");
  try {
    const auto r = replay(loaded, cfg, scenario);
    c.expect(world_digest(r.final_world) == world_digest(recorded.final_world), "replay final digest");
  } catch (const std::exception& e) {
    c.expect(false, std::string("replay: ") + e.what());
  }
}

void assist_benefit(Checks& c) {
  const ServerConfig cfg;
  for (const std::string name : {"fetch_redbull", "soiled_towel"}) {
    const Scenario scenario = load_scenario(name);
    hat::testing::OperatorOptions opt;
    opt.aim_error_m = 0.1;
    opt.use_assist = false;
    const auto plain = hat::testing::run_operator(cfg, scenario, opt);
    opt.use_assist = true;
    const auto assisted = hat::testing::run_operator(cfg, scenario, opt);
    std::cout << "    " << name << ": without assist "
              << (plain.completed ? "completed at tick " + std::to_string(plain.ticks) : "not completed") << ", "
              << plain.grasp_attempts << " grasp attempts; with assist "
              << (assisted.completed ? "completed at tick " + std::to_string(assisted.ticks) : "not completed") << ", "
              << assisted.grasp_attempts << " grasp attempts\n";
    c.expect(!plain.grasped, name + ": unassisted operator grasped");
    c.expect(assisted.completed, name + ": assisted operator did not complete");
    c.expect(assisted.ticks < plain.ticks, name + ": assisted run not faster");
  }
}

void protocol_round_trip(Checks& c) {
  const std::vector<InboundMessage> inbound = {HeadPoseMsg{-3.5, 12.25, 179.5, 1e6},
                                               ClickMsg{ClickAction::Press, 0.0},
                                               ClickMsg{ClickAction::Release, 51.5},
                                               QueryMsg{{"Red Bull", "can"}},
                                               QueryMsg{{}},
                                               ResetMsg{},
                                               CursorTargetMsg{CursorStyle::Velocity},
                                               CursorTargetMsg{CursorStyle::Position}};
  for (const auto& m : inbound) {
    c.expect(parse_inbound(serialize(m)) == m, "inbound " + serialize(m));
    json j = json::parse(serialize(m));
    j["extra_field"] = {{"nested", true}};
    c.expect(parse_inbound(j.dump()) == m, "inbound with unknown field " + serialize(m));
  }

  // snapshots from every mode, with and without optional parts
  TeleopPipeline pipeline(ServerConfig{}, load_scenario("two_cups"));
  const auto script = hat::testing::random_script(600, 77);
  std::vector<OutboundSnapshot> snaps = {OutboundSnapshot{}, pipeline.snapshot()};
  for (const auto& tick : script.ticks) snaps.push_back(pipeline.tick(tick).snapshot);
  OutboundSnapshot rich = snaps.back();
  rich.role = "observer";
  rich.cursor = CursorPosition{1.5, 2.5};
  rich.attached_id = 1;
  rich.assist = {true, 0.5, 2, {{1, 0.25}, {2, 0.75}}};
  rich.announcements = {"a", "b"};
  snaps.push_back(rich);
  for (const auto& s : snaps) {
    const std::string text = serialize(s);
    c.expect(snapshot_from(json::parse(text)) == s, "snapshot tick " + std::to_string(s.tick));
    json j = json::parse(text);
    j["unknown"] = 1;
    c.expect(snapshot_from(j) == s, "snapshot with unknown field");
  }
  const ErrorReply e{"yaw_deg", "angle outside [-180, 180]"};
  c.expect(error_reply_from(to_json_value(e)) == e, "error reply");
}

struct Criterion {
  const char* name;
  double limit_s;
  std::function<void(Checks&)> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"velocity mapping table, all actuators", 1.0, mapping_table},
      {"velocity mapping properties", 5.0, mapping_properties},
      {"cursor position mapping", 1.0, cursor_position_check},
      {"intent probabilities and confidence", 1.0, intent_math},
      {"jacobian and pseudo-inverse", 5.0, jacobian_check},
      {"assistance mask guarantee", 5.0, mask_guarantee},
      {"assist convergence", 2.0, assist_convergence},
      {"mode state-machine tables", 1.0, mode_tables},
      {"determinism and replay", 5.0, determinism},
      {"directional assist benefit", 10.0, assist_benefit},
      {"protocol round trip", 1.0, protocol_round_trip},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.expect(secs < cr.limit_s, "took longer than " + std::to_string(cr.limit_s) + " s");
    std::cout << (checks.ok() ? "PASS " : "FAIL ") << cr.name << " (" << secs << " s)";
    if (!checks.ok()) std::cout << ": " << checks.summary();
    std::cout << std::endl;
    failed += checks.ok() ? 0 : 1;
  }
  std::cout << (sizeof criteria / sizeof criteria[0]) - static_cast<std::size_t>(failed) << " of "
            << sizeof criteria / sizeof criteria[0] << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
