#pragma once

// Kinematic model of a Stretch-like nonholonomic mobile manipulator.
//
// Joint ordering used by every 5-vector in this library:
//   [0] base forward velocity v      (m/s)
//   [1] base rotation rate omega     (rad/s)
//   [2] lift velocity                (m/s)
//   [3] arm extension velocity       (m/s)
//   [4] wrist yaw velocity           (rad/s)
// The gripper is a separate channel outside the 5-vector.
//
// The arm is mounted on the base and extends horizontally to the robot's
// right, perpendicular to the drive direction. Base frame: +x forward,
// +y left, +z up.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hat {

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, 5>;
using JacobianPinv = Eigen::Matrix<double, 5, 6>;

struct Range {
  double min = 0.0;
  double max = 0.0;

  double clamp(double v) const { return std::clamp(v, min, max); }
  bool contains(double v) const { return v >= min && v <= max; }
};

struct RobotGeometry {
  double arm_mount_offset = 0.14;  ///< lateral offset base origin -> arm root (m)
  double gripper_length = 0.17;    ///< wrist axis -> gripper tip (m)
  Range lift_range{0.0, 1.10};
  Range extension_range{0.0, 0.52};
  Range wrist_range{-1.75, 1.75};
  Range gripper_range{0.0, 1.0};

  void validate() const {
    auto check = [](const Range& r, const char* name) {
      if (!(r.min < r.max)) throw std::invalid_argument(std::string("geometry: empty range ") + name);
    };
    check(lift_range, "lift_range");
    check(extension_range, "extension_range");
    check(wrist_range, "wrist_range");
    check(gripper_range, "gripper_range");
    if (arm_mount_offset < 0.0 || gripper_length < 0.0)
      throw std::invalid_argument("geometry: offsets must be non-negative");
  }

  bool operator==(const RobotGeometry&) const = default;
};

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;    ///< radians, normalized to (-pi, pi]
  double lift = 0.5;       ///< m
  double extension = 0.0;  ///< m
  double wrist = 0.0;      ///< rad
  double gripper = 1.0;    ///< rad, aperture

  bool operator==(const RobotState&) const = default;
};

struct JointVelocityCommand {
  double base_forward = 0.0;   ///< v (m/s)
  double base_rotation = 0.0;  ///< omega (rad/s)
  double lift = 0.0;           ///< m/s
  double extension = 0.0;      ///< m/s
  double wrist = 0.0;          ///< rad/s
  double gripper = 0.0;        ///< rad/s; negative closes

  Vector5 joints() const {
    Vector5 q;
    q << base_forward, base_rotation, lift, extension, wrist;
    return q;
  }

  void set_joints(const Vector5& q) {
    base_forward = q[0];
    base_rotation = q[1];
    lift = q[2];
    extension = q[3];
    wrist = q[4];
  }

  bool is_zero() const { return *this == JointVelocityCommand{}; }

  bool operator==(const JointVelocityCommand&) const = default;
};

struct EndEffectorPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  ///< world frame (m)
  double planar_orientation = 0.0;                     ///< gripper pointing direction (rad)
};

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle to (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

inline bool is_valid(const RobotState& s, const RobotGeometry& g) {
  return std::isfinite(s.x) && std::isfinite(s.y) && s.heading > -std::numbers::pi &&
         s.heading <= std::numbers::pi && g.lift_range.contains(s.lift) &&
         g.extension_range.contains(s.extension) && g.wrist_range.contains(s.wrist) &&
         g.gripper_range.contains(s.gripper);
}

/// End-effector position relative to the base origin, expressed in the base frame.
inline Eigen::Vector3d end_effector_in_base(const RobotState& s, const RobotGeometry& g) {
  const double reach = g.arm_mount_offset + s.extension;
  return {g.gripper_length * std::sin(s.wrist),
          -reach - g.gripper_length * std::cos(s.wrist),
          s.lift};
}

inline EndEffectorPose forward_kinematics(const RobotState& s, const RobotGeometry& g) {
  const Eigen::Vector3d local = end_effector_in_base(s, g);
  const double c = std::cos(s.heading);
  const double sn = std::sin(s.heading);
  EndEffectorPose pose;
  pose.position = {s.x + c * local.x() - sn * local.y(),
                   s.y + sn * local.x() + c * local.y(),
                   local.z()};
  pose.planar_orientation = normalize_angle(s.heading + s.wrist - std::numbers::pi / 2.0);
  return pose;
}

/// Maps [v, omega, lift, extension, wrist] velocities to the end-effector twist
/// (linear; angular) expressed in the base frame.
inline Jacobian jacobian(const RobotState& s, const RobotGeometry& g) {
  const Eigen::Vector3d p = end_effector_in_base(s, g);
  Jacobian J = Jacobian::Zero();
  // base forward
  J(0, 0) = 1.0;
  // base rotation about the base z axis
  J(0, 1) = -p.y();
  J(1, 1) = p.x();
  J(5, 1) = 1.0;
  // lift
  J(2, 2) = 1.0;
  // extension pushes along base -y
  J(1, 3) = -1.0;
  // wrist yaw
  J(0, 4) = g.gripper_length * std::cos(s.wrist);
  J(1, 4) = g.gripper_length * std::sin(s.wrist);
  J(5, 4) = 1.0;
  return J;
}

/// Returns J^T (J J^T + lambda^2 I)^-1, evaluated through the SVD of J.
/// With lambda = 0 this is the Moore-Penrose pseudo-inverse and a rank-deficient
/// J is reported as a SingularityError.
inline JacobianPinv damped_pseudo_inverse(const Jacobian& J, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("damped_pseudo_inverse: lambda must be >= 0");
  Eigen::JacobiSVD<Jacobian> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, sigma.size() > 0 ? sigma[0] : 0.0);

  Eigen::Matrix<double, 5, 6> sigma_inv = Eigen::Matrix<double, 5, 6>::Zero();
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    if (lambda == 0.0) {
      if (s <= tol) throw SingularityError("damped_pseudo_inverse: singular Jacobian with zero damping");
      sigma_inv(i, i) = 1.0 / s;
    } else {
      sigma_inv(i, i) = s / (s * s + lambda * lambda);
    }
  }
  return svd.matrixV() * sigma_inv * svd.matrixU().transpose();
}

/// One explicit Euler step of the base unicycle and arm joints, clamped to limits.
inline RobotState integrate(const RobotState& s, const JointVelocityCommand& cmd, double dt,
                            const RobotGeometry& g) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  RobotState n = s;
  n.x = s.x + cmd.base_forward * std::cos(s.heading) * dt;
  n.y = s.y + cmd.base_forward * std::sin(s.heading) * dt;
  n.heading = normalize_angle(s.heading + cmd.base_rotation * dt);
  n.lift = g.lift_range.clamp(s.lift + cmd.lift * dt);
  n.extension = g.extension_range.clamp(s.extension + cmd.extension * dt);
  n.wrist = g.wrist_range.clamp(s.wrist + cmd.wrist * dt);
  n.gripper = g.gripper_range.clamp(s.gripper + cmd.gripper * dt);
  return n;
}

}  // namespace hat
