#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace telesim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;
using Isometry = Eigen::Isometry3d;

/// Joint-space state of a serial chain: positions q [rad] and velocities qd [rad/s].
struct JointState {
  VecX q;
  VecX qd;

  JointState() = default;
  JointState(VecX q_in, VecX qd_in);

  int dof() const { return static_cast<int>(q.size()); }
  static JointState zero(int n);
};

/// Rigid-body pose of a task frame in the base frame.
struct TaskPose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  /// Throws std::invalid_argument if the quaternion norm is off by more than 1e-9.
  void validate() const;
  static TaskPose identity() { return {}; }
};

/// 6-D velocity, linear [m/s] before angular [rad/s].
struct TaskTwist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 vector() const;
  static TaskTwist zero() { return {}; }
  static TaskTwist from_vector(const Vec6& v);
};

/// 6-D force, force [N] before torque [N·m].
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Vec6 vector() const;
  static Wrench zero() { return {}; }
  static Wrench from_vector(const Vec6& v);
};

/// 6-D pose error [position difference; axis-angle of the relative rotation],
/// expressed in the base frame. The rotation part is the rotation vector of
/// desired.orientation * actual.orientation^-1 (shortest arc).
Vec6 pose_error(const TaskPose& desired, const TaskPose& actual);

/// Rotation vector (axis * angle) of a unit quaternion, shortest arc.
Vec3 rotation_vector(const Quat& q);

bool all_finite(const VecX& v);

}  // namespace telesim
