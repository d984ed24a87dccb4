#include "telesim/reference_models.hpp"

namespace telesim {

namespace {

Mat3 diag_inertia(double ixx, double iyy, double izz) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = ixx;
  m(1, 1) = iyy;
  m(2, 2) = izz;
  return m;
}

Isometry translate(double x, double y, double z) {
  Isometry t = Isometry::Identity();
  t.translation() = Vec3(x, y, z);
  return t;
}

}  // namespace

ArmModel one_link_pendulum(double mass, double com_offset, double inertia_zz,
                           double tip, double gravity) {
  LinkParams link;
  link.mass = mass;
  link.com = Vec3(com_offset, 0, 0);
  link.inertia = diag_inertia(1e-3, inertia_zz, inertia_zz);
  link.axis = Vec3::UnitZ();
  link.transform = Isometry::Identity();
  link.limit_lower = -3.0;
  link.limit_upper = 3.0;
  link.velocity_limit = 20.0;
  link.torque_limit = 100.0;
  return ArmModel({link}, Vec3(0, -gravity, 0), translate(tip, 0, 0));
}

ArmModel two_link_planar() {
  LinkParams l1;
  l1.mass = 3.0;
  l1.com = Vec3(0.2, 0, 0);
  l1.inertia = diag_inertia(2e-3, 0.04, 0.04);
  l1.axis = Vec3::UnitZ();
  l1.transform = Isometry::Identity();
  l1.limit_lower = -3.0;
  l1.limit_upper = 3.0;
  l1.velocity_limit = 8.0;
  l1.torque_limit = 80.0;

  LinkParams l2;
  l2.mass = 2.0;
  l2.com = Vec3(0.15, 0, 0);
  l2.inertia = diag_inertia(1.5e-3, 0.015, 0.015);
  l2.axis = Vec3::UnitZ();
  l2.transform = translate(0.4, 0, 0);
  l2.limit_lower = -3.0;
  l2.limit_upper = 3.0;
  l2.velocity_limit = 8.0;
  l2.torque_limit = 60.0;

  return ArmModel({l1, l2}, Vec3(0, -9.81, 0), translate(0.3, 0, 0));
}

ArmModel three_link_planar() {
  LinkParams l1;
  l1.mass = 2.5;
  l1.com = Vec3(0.15, 0, 0);
  l1.inertia = diag_inertia(2e-3, 0.01875, 0.01875);
  l1.axis = Vec3::UnitY();
  l1.transform = translate(0, 0, 0.15);
  l1.limit_lower = -2.9;
  l1.limit_upper = 2.9;
  l1.velocity_limit = 2.5;
  l1.torque_limit = 40.0;

  LinkParams l2;
  l2.mass = 1.8;
  l2.com = Vec3(0.125, 0, 0);
  l2.inertia = diag_inertia(1.5e-3, 0.009375, 0.009375);
  l2.axis = Vec3::UnitY();
  l2.transform = translate(0.3, 0, 0);
  l2.limit_lower = -2.9;
  l2.limit_upper = 2.9;
  l2.velocity_limit = 2.5;
  l2.torque_limit = 30.0;

  LinkParams l3;
  l3.mass = 1.2;
  l3.com = Vec3(0.1, 0, 0);
  l3.inertia = diag_inertia(1e-3, 0.004, 0.004);
  l3.axis = Vec3::UnitY();
  l3.transform = translate(0.25, 0, 0);
  l3.limit_lower = -2.9;
  l3.limit_upper = 2.9;
  l3.velocity_limit = 2.5;
  l3.torque_limit = 15.0;

  return ArmModel({l1, l2, l3}, Vec3(0, 0, -9.81), translate(0.2, 0, 0));
}

ArmModel seven_dof_arm() {
  const auto make = [](double mass, Vec3 com, Vec3 inertia_diag, Vec3 axis,
                       Isometry transform, double lo, double hi, double vel,
                       double torque) {
    LinkParams lk;
    lk.mass = mass;
    lk.com = std::move(com);
    lk.inertia = diag_inertia(inertia_diag.x(), inertia_diag.y(), inertia_diag.z());
    lk.axis = std::move(axis);
    lk.transform = std::move(transform);
    lk.limit_lower = lo;
    lk.limit_upper = hi;
    lk.velocity_limit = vel;
    lk.torque_limit = torque;
    return lk;
  };

  std::vector<LinkParams> links;
  links.push_back(make(3.5, {0.0, 0.02, -0.08}, {0.030, 0.030, 0.010}, Vec3::UnitZ(),
                       translate(0, 0, 0.30), -2.8, 2.8, 2.2, 80.0));
  links.push_back(make(3.2, {0.0, -0.03, 0.05}, {0.030, 0.010, 0.030}, Vec3::UnitY(),
                       Isometry::Identity(), -2.0, 2.0, 2.2, 80.0));
  links.push_back(make(2.7, {0.02, 0.0, -0.06}, {0.020, 0.020, 0.008}, Vec3::UnitZ(),
                       translate(0, 0, 0.25), -2.8, 2.8, 2.2, 70.0));
  links.push_back(make(2.3, {-0.03, 0.02, 0.03}, {0.020, 0.008, 0.020}, Vec3::UnitY(),
                       translate(0.05, 0, 0), -2.0, 2.0, 2.2, 60.0));
  links.push_back(make(1.7, {0.0, 0.01, -0.10}, {0.015, 0.015, 0.005}, Vec3::UnitZ(),
                       translate(-0.05, 0, 0.25), -2.8, 2.8, 2.5, 30.0));
  links.push_back(make(1.2, {0.04, 0.0, 0.01}, {0.008, 0.006, 0.008}, Vec3::UnitY(),
                       Isometry::Identity(), -2.0, 2.0, 2.5, 25.0));
  links.push_back(make(0.6, {0.0, 0.0, 0.03}, {0.006, 0.006, 0.004}, Vec3::UnitZ(),
                       translate(0, 0, 0.08), -2.8, 2.8, 2.5, 12.0));

  return ArmModel(std::move(links), Vec3(0, 0, -9.81), translate(0, 0, 0.10));
}

}  // namespace telesim
