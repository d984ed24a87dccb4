#pragma once

#include "telesim/arm_model.hpp"
#include "telesim/types.hpp"

namespace telesim {

using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Joint-space inertia matrix M(q), computed by the composite-rigid-body
/// algorithm. Symmetric positive definite for any valid model.
MatX mass_matrix(const ArmModel& model, const VecX& q);

/// Coriolis/centrifugal plus gravity torques C(q,qd)·qd + G(q), computed by
/// recursive Newton-Euler with zero joint acceleration.
VecX bias_forces(const ArmModel& model, const JointState& state);

/// Gravity torques G(q). Identical to bias_forces at qd = 0.
VecX gravity_torques(const ArmModel& model, const VecX& q);

/// Geometric Jacobian of the end-effector in the base frame,
/// rows ordered [linear; angular].
Jacobian jacobian(const ArmModel& model, const VecX& q);

/// End-effector pose in the base frame.
TaskPose forward_kinematics(const ArmModel& model, const VecX& q);

/// Poses of every link frame plus the end-effector (size dof+1);
/// used for COM bookkeeping and potential-energy oracles.
std::vector<Isometry> link_transforms(const ArmModel& model, const VecX& q);

/// Total kinetic energy 0.5·qd'·M(q)·qd.
double kinetic_energy(const ArmModel& model, const JointState& state);

/// Gravitational potential energy (zero level at the base frame origin).
double potential_energy(const ArmModel& model, const VecX& q);

/// Integrates qdd = M^-1(tau + J'·f_ext - bias) over dt with fixed-step RK4;
/// tau and f_ext are held constant across the step. dt = 0 returns the input
/// state unchanged. f_ext is the external wrench at the end-effector,
/// expressed in the base frame.
JointState step(const ArmModel& model, const JointState& state, const VecX& tau,
                const Wrench& f_ext, double dt);

/// Forward-dynamics acceleration at a single state.
VecX forward_acceleration(const ArmModel& model, const JointState& state,
                          const VecX& tau, const Wrench& f_ext);

}  // namespace telesim
