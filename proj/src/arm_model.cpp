#include "telesim/arm_model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace telesim {

ArmModel::ArmModel(std::vector<LinkParams> links, Vec3 gravity, Isometry tool)
    : links_(std::move(links)), gravity_(std::move(gravity)), tool_(std::move(tool)) {
  const int n = dof();
  if (n < 1 || n > 7) {
    throw std::invalid_argument("ArmModel: joint count must be in [1, 7]");
  }
  lower_.resize(n);
  upper_.resize(n);
  vel_limits_.resize(n);
  torque_limits_.resize(n);
  for (int i = 0; i < n; ++i) {
    const LinkParams& lk = links_[i];
    std::ostringstream tag;
    tag << "ArmModel link " << i << ": ";
    if (!(lk.mass > 0.0)) {
      throw std::invalid_argument(tag.str() + "mass must be > 0");
    }
    if ((lk.inertia - lk.inertia.transpose()).norm() > 1e-12) {
      throw std::invalid_argument(tag.str() + "inertia tensor must be symmetric");
    }
    Eigen::LLT<Mat3> llt(lk.inertia);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument(tag.str() + "inertia tensor must be positive definite");
    }
    if (std::abs(lk.axis.norm() - 1.0) > 1e-12) {
      throw std::invalid_argument(tag.str() + "joint axis must be unit norm");
    }
    if (!(lk.limit_lower < lk.limit_upper)) {
      throw std::invalid_argument(tag.str() + "joint limits must satisfy lower < upper");
    }
    if (!(lk.velocity_limit > 0.0) || !(lk.torque_limit > 0.0)) {
      throw std::invalid_argument(tag.str() + "velocity/torque limits must be > 0");
    }
    lower_[i] = lk.limit_lower;
    upper_[i] = lk.limit_upper;
    vel_limits_[i] = lk.velocity_limit;
    torque_limits_[i] = lk.torque_limit;
  }
  if (!gravity_.allFinite()) {
    throw std::invalid_argument("ArmModel: gravity must be finite");
  }
}

void ArmModel::check_dimension(const VecX& q, const char* where) const {
  if (q.size() != dof()) {
    std::ostringstream msg;
    msg << where << ": vector length " << q.size() << " does not match " << dof()
        << "-joint model";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace telesim
