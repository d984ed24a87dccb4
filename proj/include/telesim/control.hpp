#pragma once

#include <array>
#include <vector>

#include "telesim/arm_model.hpp"
#include "telesim/dynamics.hpp"
#include "telesim/types.hpp"

namespace telesim {

/// Controller gains and reference postures for one arm.
///
/// K/B act on the 6-D task error [linear; angular]. The wall gains are
/// per-joint scalars; the wall is a unilateral spring-damper active only
/// outside [wall_lower, wall_upper]. `task_rows` selects which rows of the
/// geometric Jacobian constitute the primary task when building the nullspace
/// projector (a planar arm uses a 2-D position task).
struct GainSet {
  Mat6 stiffness = Mat6::Zero();        // K
  Mat6 damping = Mat6::Zero();          // B
  MatX null_stiffness;                  // K_null, n x n
  MatX null_damping;                    // B_null, n x n
  VecX wall_stiffness;                  // K_wall per joint
  VecX wall_damping;                    // B_wall per joint
  VecX wall_lower;
  VecX wall_upper;
  VecX posture;                         // q0
  std::array<bool, 6> task_rows = {true, true, true, true, true, true};

  int dof() const { return static_cast<int>(posture.size()); }
  void validate(const ArmModel& model) const;

  /// K_pos=500, K_rot=20, B critically damped against the task-space inertia
  /// at q0, K_null=5, B_null=1, K_wall=200, B_wall=5, walls inset from the
  /// hard limits by `wall_margin`.
  static GainSet defaults(const ArmModel& model, const VecX& q0,
                          double wall_margin = 0.15);
};

/// 3-DoF gripper or glove state.
struct GripperState {
  Vec3 q = Vec3::Zero();
  Vec3 qd = Vec3::Zero();
};

/// One footplate reading plus its interpretation parameters.
struct FootplateSample {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  Eigen::Matrix<double, 5, 1> pressures = Eigen::Matrix<double, 5, 1>::Zero();
  double pressure_threshold = 20.0;  // N
  double deadband = 0.05;            // rad
  double max_tilt = 0.30;            // rad
  TaskTwist max_twist;               // per-axis output bound

  void validate() const;
};

struct ControlDiagnostics {
  bool near_singular = false;
  bool saturated = false;
  std::vector<int> saturated_joints;
};

/// Task-space impedance torque with full gravity/Coriolis compensation:
///   tau = J' (K e_x + B e_xd - F_e) + C(q,qd) qd + G(q)
/// e_x uses position difference and the axis-angle orientation error.
VecX cartesian_impedance_torque(const ArmModel& model, const JointState& state,
                                const TaskPose& x_d, const TaskTwist& xd_d,
                                const Wrench& f_e, const GainSet& gains);

/// Posture torque projected into the task nullspace:
///   (I - J' J'^+) (K_null (q0 - q) - B_null qd)
/// The pseudo-inverse is SVD-based with a relative cutoff of 1e-6; near
/// singularities a damped inverse (lambda = 1e-3) is used and flagged.
VecX nullspace_torque(const ArmModel& model, const JointState& state,
                      const GainSet& gains, ControlDiagnostics* diag = nullptr);

/// Per-joint unilateral wall: zero strictly inside [wall_lower, wall_upper],
/// otherwise K_wall (q_wall - q) - B_wall qd toward the violated wall.
VecX virtual_wall_torque(const JointState& state, const GainSet& gains);

struct GripperCoupling {
  Vec3 master;  // torque applied to the glove
  Vec3 slave;   // torque applied to the gripper
};

/// Per-DoF spring-damper coupling, equal and opposite on both sides:
///   tau_slave_i = k_i (q_m - q_s) + b_i (qd_m - qd_s), tau_master = -tau_slave
GripperCoupling gripper_coupling_torques(const GripperState& master,
                                         const GripperState& slave, const Vec3& k,
                                         const Vec3& b);

/// Footplate deadman gating and deadband-then-cubic tilt mapping:
/// fewer than 2 of 5 pressures above threshold -> zero twist; otherwise each
/// axis maps through ((|a|-deadband)/(max_tilt-deadband))^3, clamped, with
/// roll -> lateral, pitch -> forward, yaw -> rotation.
TaskTwist footplate_to_twist(const FootplateSample& sample);

/// Sum of impedance, nullspace, and wall torques, saturated at the model
/// torque limits. Saturation is reported through `diag`.
VecX compose_arm_torque(const ArmModel& model, const JointState& state,
                        const TaskPose& x_d, const TaskTwist& xd_d,
                        const Wrench& f_e, const GainSet& gains,
                        ControlDiagnostics* diag = nullptr);

}  // namespace telesim
