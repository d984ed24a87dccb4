#include "telesim/control.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telesim {

namespace {

constexpr double kSvdRelativeCutoff = 1e-6;
constexpr double kDampedLambda = 1e-3;

void require_finite(const VecX& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

MatX task_jacobian(const Jacobian& j, const std::array<bool, 6>& rows) {
  int m = 0;
  for (bool r : rows) m += r ? 1 : 0;
  MatX jt(m, j.cols());
  int k = 0;
  for (int r = 0; r < 6; ++r) {
    if (rows[r]) jt.row(k++) = j.row(r);
  }
  return jt;
}

}  // namespace

void GainSet::validate(const ArmModel& model) const {
  const int n = model.dof();
  if (posture.size() != n || wall_stiffness.size() != n || wall_damping.size() != n ||
      wall_lower.size() != n || wall_upper.size() != n ||
      null_stiffness.rows() != n || null_stiffness.cols() != n ||
      null_damping.rows() != n || null_damping.cols() != n) {
    throw std::invalid_argument("GainSet: dimensions do not match the arm model");
  }
  if ((stiffness - stiffness.transpose()).norm() > 1e-9 ||
      (damping - damping.transpose()).norm() > 1e-9) {
    throw std::invalid_argument("GainSet: K and B must be symmetric");
  }
  Eigen::LLT<Mat6> llt(stiffness);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GainSet: K must be positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Mat6> es(damping);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument("GainSet: B must be positive semidefinite");
  }
  if (null_stiffness.minCoeff() < 0.0 || null_damping.minCoeff() < 0.0 ||
      wall_stiffness.minCoeff() < 0.0 || wall_damping.minCoeff() < 0.0) {
    throw std::invalid_argument("GainSet: nullspace and wall gains must be >= 0");
  }
  for (int i = 0; i < n; ++i) {
    if (!(wall_lower[i] < wall_upper[i])) {
      throw std::invalid_argument("GainSet: wall_lower must be < wall_upper");
    }
    if (wall_lower[i] <= model.lower_limits()[i] || wall_upper[i] >= model.upper_limits()[i]) {
      throw std::invalid_argument("GainSet: walls must lie strictly inside the joint limits");
    }
  }
}

GainSet GainSet::defaults(const ArmModel& model, const VecX& q0, double wall_margin) {
  model.check_dimension(q0, "GainSet::defaults");
  const int n = model.dof();
  GainSet g;
  g.posture = q0;
  g.stiffness = Mat6::Zero();
  g.stiffness.topLeftCorner<3, 3>() = 500.0 * Mat3::Identity();
  g.stiffness.bottomRightCorner<3, 3>() = 20.0 * Mat3::Identity();

  // Critical damping against the task-space inertia at q0; a damped inverse
  // keeps the estimate sane for rank-deficient (planar) Jacobians.
  const MatX m = mass_matrix(model, q0);
  const Jacobian j = jacobian(model, q0);
  const Mat6 lambda_inv =
      j * m.llt().solve(MatX(j.transpose())) + 1e-9 * Mat6::Identity();
  const Mat6 lambda = lambda_inv.inverse();
  g.damping = Mat6::Zero();
  for (int i = 0; i < 6; ++i) {
    const double apparent = std::clamp(lambda(i, i), 0.05, 50.0);
    g.damping(i, i) = 2.0 * std::sqrt(g.stiffness(i, i) * apparent);
  }

  g.null_stiffness = 5.0 * MatX::Identity(n, n);
  g.null_damping = 1.0 * MatX::Identity(n, n);
  g.wall_stiffness = VecX::Constant(n, 200.0);
  g.wall_damping = VecX::Constant(n, 5.0);
  g.wall_lower = model.lower_limits().array() + wall_margin;
  g.wall_upper = model.upper_limits().array() - wall_margin;
  return g;
}

void FootplateSample::validate() const {
  if (pressures.minCoeff() < 0.0) {
    throw std::invalid_argument("FootplateSample: pressures must be >= 0");
  }
  if (!(deadband < max_tilt)) {
    throw std::invalid_argument("FootplateSample: deadband must be < max_tilt");
  }
  if (!(deadband >= 0.0)) {
    throw std::invalid_argument("FootplateSample: deadband must be >= 0");
  }
}

VecX cartesian_impedance_torque(const ArmModel& model, const JointState& state,
                                const TaskPose& x_d, const TaskTwist& xd_d,
                                const Wrench& f_e, const GainSet& gains) {
  model.check_dimension(state.q, "cartesian_impedance_torque");
  require_finite(state.q, "cartesian_impedance_torque q");
  require_finite(state.qd, "cartesian_impedance_torque qd");
  require_finite(x_d.position, "cartesian_impedance_torque x_d");
  require_finite(f_e.vector(), "cartesian_impedance_torque f_e");

  const Jacobian j = jacobian(model, state.q);
  const TaskPose x = forward_kinematics(model, state.q);
  const Vec6 xdot = j * state.qd;

  const Vec6 e = pose_error(x_d, x);
  const Vec6 edot = xd_d.vector() - xdot;
  const Vec6 f_task = gains.stiffness * e + gains.damping * edot - f_e.vector();

  return j.transpose() * f_task + bias_forces(model, state);
}

VecX nullspace_torque(const ArmModel& model, const JointState& state,
                      const GainSet& gains, ControlDiagnostics* diag) {
  model.check_dimension(state.q, "nullspace_torque");
  const int n = model.dof();
  const MatX jt = task_jacobian(jacobian(model, state.q), gains.task_rows);
  const int m = static_cast<int>(jt.rows());

  const VecX posture_torque =
      gains.null_stiffness * (gains.posture - state.q) - gains.null_damping * state.qd;
  if (m >= n) {
    // No redundancy: the task consumes every DoF, projector is zero.
    return VecX::Zero(n);
  }

  // Pseudo-inverse of J^T (n x m) via SVD.
  Eigen::JacobiSVD<MatX> svd(jt.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const bool degenerate =
      sigma_max <= 0.0 || sigma(sigma.size() - 1) / sigma_max < kSvdRelativeCutoff;
  if (degenerate && diag != nullptr) {
    diag->near_singular = true;
  }

  VecX inv_sigma(sigma.size());
  for (int i = 0; i < sigma.size(); ++i) {
    if (degenerate) {
      inv_sigma[i] = sigma[i] / (sigma[i] * sigma[i] + kDampedLambda * kDampedLambda);
    } else {
      inv_sigma[i] = sigma[i] > sigma_max * kSvdRelativeCutoff ? 1.0 / sigma[i] : 0.0;
    }
  }
  const MatX jt_pinv =
      svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose();

  const MatX projector = MatX::Identity(n, n) - jt.transpose() * jt_pinv;
  return projector * posture_torque;
}

VecX virtual_wall_torque(const JointState& state, const GainSet& gains) {
  const int n = state.dof();
  VecX tau = VecX::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (state.q[i] > gains.wall_upper[i]) {
      tau[i] = gains.wall_stiffness[i] * (gains.wall_upper[i] - state.q[i]) -
               gains.wall_damping[i] * state.qd[i];
    } else if (state.q[i] < gains.wall_lower[i]) {
      tau[i] = gains.wall_stiffness[i] * (gains.wall_lower[i] - state.q[i]) -
               gains.wall_damping[i] * state.qd[i];
    }
  }
  return tau;
}

GripperCoupling gripper_coupling_torques(const GripperState& master,
                                         const GripperState& slave, const Vec3& k,
                                         const Vec3& b) {
  GripperCoupling out;
  out.slave = k.cwiseProduct(master.q - slave.q) + b.cwiseProduct(master.qd - slave.qd);
  out.master = -out.slave;
  return out;
}

TaskTwist footplate_to_twist(const FootplateSample& sample) {
  sample.validate();

  int engaged = 0;
  for (int i = 0; i < 5; ++i) {
    if (sample.pressures[i] > sample.pressure_threshold) ++engaged;
  }
  if (engaged < 2) {
    return TaskTwist::zero();
  }

  const auto shape = [&](double tilt, double bound) {
    const double mag = std::abs(tilt);
    if (mag <= sample.deadband) return 0.0;
    const double s =
        std::min((mag - sample.deadband) / (sample.max_tilt - sample.deadband), 1.0);
    return bound * s * s * s * (tilt > 0.0 ? 1.0 : -1.0);
  };

  TaskTwist twist;
  twist.linear.x() = shape(sample.pitch, sample.max_twist.linear.x());
  twist.linear.y() = shape(sample.roll, sample.max_twist.linear.y());
  twist.angular.z() = shape(sample.yaw, sample.max_twist.angular.z());
  return twist;
}

VecX compose_arm_torque(const ArmModel& model, const JointState& state,
                        const TaskPose& x_d, const TaskTwist& xd_d,
                        const Wrench& f_e, const GainSet& gains,
                        ControlDiagnostics* diag) {
  VecX tau = cartesian_impedance_torque(model, state, x_d, xd_d, f_e, gains) +
             nullspace_torque(model, state, gains, diag) +
             virtual_wall_torque(state, gains);

  for (int i = 0; i < model.dof(); ++i) {
    const double limit = model.torque_limits()[i];
    if (std::abs(tau[i]) > limit) {
      tau[i] = std::copysign(limit, tau[i]);
      if (diag != nullptr) {
        diag->saturated = true;
        diag->saturated_joints.push_back(i);
      }
    }
  }
  return tau;
}

}  // namespace telesim
