#pragma once

#include <string>
#include <vector>

#include "telesim/types.hpp"

namespace telesim {

/// One revolute link of a serial chain. The link frame sits at the joint; the
/// joint rotates about `axis` (unit vector in the link frame). `transform` is
/// the fixed offset from the parent link frame to this joint frame. Center of
/// mass and rotational inertia are expressed in the link frame, inertia about
/// the COM.
struct LinkParams {
  double mass = 1.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Identity();
  Vec3 axis = Vec3::UnitZ();
  Isometry transform = Isometry::Identity();
  double limit_lower = -3.0;
  double limit_upper = 3.0;
  double velocity_limit = 10.0;
  double torque_limit = 100.0;
};

/// Kinematic/dynamic description of a serial revolute chain (1-7 joints).
/// Construction validates: masses > 0, inertias symmetric positive definite,
/// lower < upper limits, unit joint axes (within 1e-12).
class ArmModel {
 public:
  ArmModel(std::vector<LinkParams> links, Vec3 gravity,
           Isometry tool = Isometry::Identity());

  int dof() const { return static_cast<int>(links_.size()); }
  const LinkParams& link(int i) const { return links_.at(i); }
  const std::vector<LinkParams>& links() const { return links_; }
  const Vec3& gravity() const { return gravity_; }
  const Isometry& tool_transform() const { return tool_; }

  const VecX& lower_limits() const { return lower_; }
  const VecX& upper_limits() const { return upper_; }
  const VecX& velocity_limits() const { return vel_limits_; }
  const VecX& torque_limits() const { return torque_limits_; }

  void check_dimension(const VecX& q, const char* where) const;

 private:
  std::vector<LinkParams> links_;
  Vec3 gravity_;
  Isometry tool_;
  VecX lower_, upper_, vel_limits_, torque_limits_;
};

/// Loads an arm description from the plain-text model format (see README:
/// [arm] gravity, repeated [link] sections, optional [tool]).
/// Throws std::runtime_error with file:line context on malformed input.
ArmModel load_arm_model(const std::string& path);

}  // namespace telesim
