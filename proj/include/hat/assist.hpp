#pragma once

// Driver Assistance: goal detection, intent inference, and blended control.
//
// The assistance controller is a Cartesian proportional law through the damped
// pseudo-inverse of the Jacobian,
//
//   u_a = K_p * J^+ * (x_goal - x_ee),      u = u_h + alpha * u_a,
//
// where K_p masks out base translation, arm extension and wrist so the robot only
// helps with base rotation and lift. Rows the operator is actively driving are
// attenuated by rho_c. alpha is the gap between the two most likely goals.

#include "hat/hat_mapping.hpp"
#include "hat/kinematics.hpp"
#include "hat/world_object.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hat {

struct GoalCandidate {
  int id = 0;
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct GoalProbability {
  int id = 0;
  double p = 0.0;

  bool operator==(const GoalProbability&) const = default;
};

struct IntentEstimate {
  std::vector<GoalProbability> probabilities;  ///< in goal-set order
  std::optional<int> g_star;
  std::optional<Eigen::Vector3d> goal_position;  ///< position of g_star
  double confidence = 0.0;                       ///< alpha, in [0, 1]
};

struct AssistConfig {
  double rho = 5.0;    ///< 1/m
  double rho_c = 0.2;  ///< attenuation on operator-driven joints
  Vector5 gain_mask = (Vector5() << 0.0, 1.0, 1.0, 0.0, 0.0).finished();
  Vector5 gains = Vector5::Ones();  ///< 1/s, applied before the mask
  double damping = 0.01;

  Eigen::Matrix<double, 5, 5> kp() const { return gain_mask.cwiseProduct(gains).asDiagonal(); }

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("assist: rho must be positive");
    if (!(rho_c >= 0.0 && rho_c <= 1.0)) throw std::invalid_argument("assist: rho_c must be in [0, 1]");
    if (!(damping >= 0.0)) throw std::invalid_argument("assist: damping must be >= 0");
  }

  bool operator==(const AssistConfig&) const = default;
};

/// Simulated open-vocabulary detector settings. Noise is off by default.
struct DetectorConfig {
  double position_noise_stddev = 0.0;  ///< m
  unsigned long long seed = 1;

  bool operator==(const DetectorConfig&) const = default;
};

namespace detail {
inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}
}  // namespace detail

/// Returns every object whose label contains any query (case-insensitive), with
/// ground-truth positions.
inline std::vector<GoalCandidate> detect_objects(std::span<const WorldObject> world,
                                                 std::span<const std::string> queries) {
  std::vector<std::string> q;
  for (const auto& s : queries)
    if (!s.empty()) q.push_back(detail::lower(s));

  std::vector<GoalCandidate> out;
  for (const WorldObject& obj : world) {
    const std::string label = detail::lower(obj.label);
    const bool hit = std::any_of(q.begin(), q.end(), [&](const std::string& s) { return label.find(s) != std::string::npos; });
    if (hit) out.push_back({obj.id, obj.label, obj.position});
  }
  return out;
}

/// As above, perturbing each reported position with isotropic Gaussian noise.
template <class Rng>
std::vector<GoalCandidate> detect_objects(std::span<const WorldObject> world, std::span<const std::string> queries,
                                          const DetectorConfig& cfg, Rng& rng) {
  auto out = detect_objects(world, queries);
  if (cfg.position_noise_stddev > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.position_noise_stddev);
    for (auto& g : out)
      for (int k = 0; k < 3; ++k) g.position[k] += noise(rng);
  }
  return out;
}

inline double goal_probability(double distance, double rho) { return 1.0 / (1.0 + rho * distance); }

inline IntentEstimate infer_intent(std::span<const GoalCandidate> goals, const EndEffectorPose& ee,
                                   const AssistConfig& cfg) {
  IntentEstimate est;
  if (goals.empty()) return est;

  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const double d = (goals[i].position - ee.position).norm();
    est.probabilities.push_back({goals[i].id, goal_probability(d, cfg.rho)});
    // ties go to the lowest id
    if (i == 0 || d < best_d || (d == best_d && goals[i].id < goals[best].id)) {
      best = i;
      best_d = d;
    }
  }

  const double p_star = est.probabilities[best].p;
  double runner_up = 0.0;
  bool has_runner_up = false;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (i == best) continue;
    runner_up = has_runner_up ? std::max(runner_up, est.probabilities[i].p) : est.probabilities[i].p;
    has_runner_up = true;
  }

  est.g_star = goals[best].id;
  est.goal_position = goals[best].position;
  est.confidence = std::clamp(has_runner_up ? p_star - runner_up : p_star, 0.0, 1.0);
  return est;
}

/// Unblended assistance u_a for the current state and goal, before alpha.
/// `user` selects which rows are attenuated by rho_c.
inline Vector5 assistance(const RobotState& state, const Eigen::Vector3d& goal, const Vector5& user,
                          const AssistConfig& cfg, const RobotGeometry& geom) {
  const EndEffectorPose ee = forward_kinematics(state, geom);
  const Eigen::Vector3d err_world = goal - ee.position;
  const double c = std::cos(state.heading);
  const double s = std::sin(state.heading);

  Vector6 err = Vector6::Zero();
  err[0] = c * err_world.x() + s * err_world.y();
  err[1] = -s * err_world.x() + c * err_world.y();
  err[2] = err_world.z();

  const JacobianPinv pinv = damped_pseudo_inverse(jacobian(state, geom), cfg.damping);
  Vector5 u_a = cfg.kp() * (pinv * err);
  for (int i = 0; i < 5; ++i)
    if (user[i] != 0.0) u_a[i] *= cfg.rho_c;
  return u_a;
}

inline JointVelocityCommand assist_command(const RobotState& state, const IntentEstimate& intent,
                                           const JointVelocityCommand& u_h, const AssistConfig& cfg,
                                           const RobotGeometry& geom, const ActuatorLimits& limits) {
  if (!intent.g_star || !intent.goal_position) return u_h;
  if (intent.confidence == 0.0) return u_h;

  const Vector5 user = u_h.joints();
  const Vector5 u_a = assistance(state, *intent.goal_position, user, cfg, geom);
  JointVelocityCommand out = u_h;
  out.set_joints(user + intent.confidence * u_a);
  return saturate(out, limits);
}

}  // namespace hat
