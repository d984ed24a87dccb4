#include "telesim/dynamics.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>
#include <vector>

#include "spatial.hpp"

namespace telesim {

namespace {

using spatial::Transform;

struct ChainFrames {
  // X_up[i]: motion-coordinate transform from parent link frame to link i frame.
  std::vector<Transform> x_up;
  std::vector<Vec6> subspace;  // joint motion subspace in link coordinates
};

ChainFrames chain_frames(const ArmModel& model, const VecX& q) {
  const int n = model.dof();
  ChainFrames out;
  out.x_up.resize(n);
  out.subspace.resize(n);
  for (int i = 0; i < n; ++i) {
    const LinkParams& lk = model.link(i);
    Transform fixed;
    fixed.E = lk.transform.linear().transpose();
    fixed.r = lk.transform.translation();
    Transform joint;
    joint.E = Eigen::AngleAxisd(q[i], lk.axis).toRotationMatrix().transpose();
    out.x_up[i] = joint * fixed;
    Vec6 s = Vec6::Zero();
    s.head<3>() = lk.axis;
    out.subspace[i] = s;
  }
  return out;
}

Mat6 link_spatial_inertia(const LinkParams& lk) {
  return spatial::spatial_inertia(lk.mass, lk.com, lk.inertia);
}

// RNEA with arbitrary qdd; returns generalized forces. Gravity enters through
// the fictitious base acceleration -g.
VecX inverse_dynamics(const ArmModel& model, const VecX& q, const VecX& qd,
                      const VecX& qdd) {
  const int n = model.dof();
  const ChainFrames frames = chain_frames(model, q);

  std::vector<Vec6> v(n), a(n), f(n);
  Vec6 a_base = Vec6::Zero();
  a_base.tail<3>() = -model.gravity();

  for (int i = 0; i < n; ++i) {
    const Vec6 vj = frames.subspace[i] * qd[i];
    if (i == 0) {
      v[i] = vj;
      a[i] = frames.x_up[i].apply_motion(a_base) + frames.subspace[i] * qdd[i];
    } else {
      v[i] = frames.x_up[i].apply_motion(v[i - 1]) + vj;
      a[i] = frames.x_up[i].apply_motion(a[i - 1]) + frames.subspace[i] * qdd[i] +
             spatial::cross_motion(v[i], vj);
    }
    const Mat6 inertia = link_spatial_inertia(model.link(i));
    f[i] = inertia * a[i] + spatial::cross_force(v[i], inertia * v[i]);
  }

  VecX tau(n);
  for (int i = n - 1; i >= 0; --i) {
    tau[i] = frames.subspace[i].dot(f[i]);
    if (i > 0) {
      f[i - 1] += frames.x_up[i].apply_force_transpose(f[i]);
    }
  }
  return tau;
}

}  // namespace

MatX mass_matrix(const ArmModel& model, const VecX& q) {
  model.check_dimension(q, "mass_matrix");
  const int n = model.dof();
  const ChainFrames frames = chain_frames(model, q);

  std::vector<Mat6> composite(n);
  for (int i = 0; i < n; ++i) {
    composite[i] = link_spatial_inertia(model.link(i));
  }
  for (int i = n - 1; i > 0; --i) {
    const Mat6 x = frames.x_up[i].motion_matrix();
    composite[i - 1] += x.transpose() * composite[i] * x;
  }

  MatX m = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec6 f = composite[i] * frames.subspace[i];
    m(i, i) = frames.subspace[i].dot(f);
    for (int j = i; j > 0; --j) {
      f = frames.x_up[j].apply_force_transpose(f);
      m(i, j - 1) = frames.subspace[j - 1].dot(f);
      m(j - 1, i) = m(i, j - 1);
    }
  }
  return m;
}

VecX bias_forces(const ArmModel& model, const JointState& state) {
  model.check_dimension(state.q, "bias_forces");
  model.check_dimension(state.qd, "bias_forces");
  return inverse_dynamics(model, state.q, state.qd, VecX::Zero(model.dof()));
}

VecX gravity_torques(const ArmModel& model, const VecX& q) {
  model.check_dimension(q, "gravity_torques");
  const int n = model.dof();
  return inverse_dynamics(model, q, VecX::Zero(n), VecX::Zero(n));
}

std::vector<Isometry> link_transforms(const ArmModel& model, const VecX& q) {
  model.check_dimension(q, "link_transforms");
  const int n = model.dof();
  std::vector<Isometry> frames(n + 1);
  Isometry t = Isometry::Identity();
  for (int i = 0; i < n; ++i) {
    const LinkParams& lk = model.link(i);
    t = t * lk.transform * Eigen::AngleAxisd(q[i], lk.axis);
    frames[i] = t;
  }
  frames[n] = t * model.tool_transform();
  return frames;
}

TaskPose forward_kinematics(const ArmModel& model, const VecX& q) {
  const std::vector<Isometry> frames = link_transforms(model, q);
  TaskPose pose;
  pose.position = frames.back().translation();
  pose.orientation = Quat(frames.back().linear()).normalized();
  return pose;
}

Jacobian jacobian(const ArmModel& model, const VecX& q) {
  model.check_dimension(q, "jacobian");
  const int n = model.dof();
  const std::vector<Isometry> frames = link_transforms(model, q);
  const Vec3 p_ee = frames[n].translation();

  Jacobian j(6, n);
  for (int i = 0; i < n; ++i) {
    const Vec3 axis_world = frames[i].linear() * model.link(i).axis;
    const Vec3 arm = p_ee - frames[i].translation();
    j.col(i).head<3>() = axis_world.cross(arm);
    j.col(i).tail<3>() = axis_world;
  }
  return j;
}

double kinetic_energy(const ArmModel& model, const JointState& state) {
  return 0.5 * state.qd.dot(mass_matrix(model, state.q) * state.qd);
}

double potential_energy(const ArmModel& model, const VecX& q) {
  model.check_dimension(q, "potential_energy");
  const std::vector<Isometry> frames = link_transforms(model, q);
  double v = 0.0;
  for (int i = 0; i < model.dof(); ++i) {
    const Vec3 com_world = frames[i] * model.link(i).com;
    v -= model.link(i).mass * model.gravity().dot(com_world);
  }
  return v;
}

VecX forward_acceleration(const ArmModel& model, const JointState& state,
                          const VecX& tau, const Wrench& f_ext) {
  model.check_dimension(tau, "forward_acceleration");
  const VecX rhs =
      tau + jacobian(model, state.q).transpose() * f_ext.vector() - bias_forces(model, state);
  Eigen::LLT<MatX> llt(mass_matrix(model, state.q));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("forward_acceleration: mass matrix not positive definite");
  }
  return llt.solve(rhs);
}

JointState step(const ArmModel& model, const JointState& state, const VecX& tau,
                const Wrench& f_ext, double dt) {
  model.check_dimension(state.q, "step");
  model.check_dimension(tau, "step");
  if (dt < 0.0) {
    throw std::invalid_argument("step: dt must be >= 0");
  }
  if (dt == 0.0) {
    return state;
  }

  const auto accel = [&](const VecX& q, const VecX& qd) {
    return forward_acceleration(model, JointState(q, qd), tau, f_ext);
  };

  const VecX k1q = state.qd;
  const VecX k1v = accel(state.q, state.qd);
  const VecX k2q = state.qd + 0.5 * dt * k1v;
  const VecX k2v = accel(state.q + 0.5 * dt * k1q, state.qd + 0.5 * dt * k1v);
  const VecX k3q = state.qd + 0.5 * dt * k2v;
  const VecX k3v = accel(state.q + 0.5 * dt * k2q, state.qd + 0.5 * dt * k2v);
  const VecX k4q = state.qd + dt * k3v;
  const VecX k4v = accel(state.q + dt * k3q, state.qd + dt * k3v);

  JointState out;
  out.q = state.q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  out.qd = state.qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return out;
}

}  // namespace telesim
