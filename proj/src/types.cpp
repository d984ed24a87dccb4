#include "telesim/types.hpp"

#include <cmath>
#include <stdexcept>

namespace telesim {

JointState::JointState(VecX q_in, VecX qd_in) : q(std::move(q_in)), qd(std::move(qd_in)) {
  if (q.size() != qd.size()) {
    throw std::invalid_argument("JointState: q and qd lengths differ");
  }
}

JointState JointState::zero(int n) {
  return JointState(VecX::Zero(n), VecX::Zero(n));
}

void TaskPose::validate() const {
  if (std::abs(orientation.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("TaskPose: orientation is not unit norm");
  }
}

Vec6 TaskTwist::vector() const {
  Vec6 v;
  v << linear, angular;
  return v;
}

TaskTwist TaskTwist::from_vector(const Vec6& v) {
  return TaskTwist{v.head<3>(), v.tail<3>()};
}

Vec6 Wrench::vector() const {
  Vec6 v;
  v << force, torque;
  return v;
}

Wrench Wrench::from_vector(const Vec6& v) {
  return Wrench{v.head<3>(), v.tail<3>()};
}

Vec3 rotation_vector(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const double sin_half = q.vec().norm();
  const double cos_half = q.w();
  const double angle = 2.0 * std::atan2(sin_half, cos_half);
  if (sin_half < 1e-12) {
    return 2.0 * q.vec();  // small-angle series, vec ~ axis*angle/2
  }
  return (angle / sin_half) * q.vec();
}

Vec6 pose_error(const TaskPose& desired, const TaskPose& actual) {
  Vec6 e;
  e.head<3>() = desired.position - actual.position;
  e.tail<3>() = rotation_vector(desired.orientation * actual.orientation.conjugate());
  return e;
}

bool all_finite(const VecX& v) {
  return v.allFinite();
}

}  // namespace telesim
