#include "telesim/arm_model.hpp"

#include <cmath>

#include "ini.hpp"

namespace telesim {

namespace {

using ini::ConfigError;

Isometry parse_transform(const ini::File& f, const ini::Entry& e) {
  const VecX v = ini::to_vector(f, e, 6);
  Isometry t = Isometry::Identity();
  t.translation() = v.head<3>();
  const Vec3 rot = v.tail<3>();
  const double angle = rot.norm();
  if (angle > 0.0) {
    t.linear() = Eigen::AngleAxisd(angle, rot / angle).toRotationMatrix();
  }
  return t;
}

Mat3 parse_inertia(const ini::File& f, const ini::Entry& e) {
  const std::vector<double> v = ini::to_doubles(f, e);
  Mat3 inertia = Mat3::Zero();
  if (v.size() == 3) {
    inertia(0, 0) = v[0];
    inertia(1, 1) = v[1];
    inertia(2, 2) = v[2];
  } else if (v.size() == 6) {
    inertia(0, 0) = v[0];
    inertia(1, 1) = v[1];
    inertia(2, 2) = v[2];
    inertia(0, 1) = inertia(1, 0) = v[3];
    inertia(0, 2) = inertia(2, 0) = v[4];
    inertia(1, 2) = inertia(2, 1) = v[5];
  } else {
    throw ConfigError(f.path, e.line,
                      "inertia expects 3 (diagonal) or 6 (ixx iyy izz ixy ixz iyz) numbers");
  }
  return inertia;
}

const ini::Entry& require(const ini::File& f, const ini::Section& s, const std::string& key) {
  const ini::Entry* e = s.find(key);
  if (e == nullptr) {
    throw ConfigError(f.path, s.line, "[" + s.name + "] is missing '" + key + "'");
  }
  return *e;
}

}  // namespace

ArmModel load_arm_model(const std::string& path) {
  const ini::File f = ini::parse_file(path);

  const ini::Section* arm = f.find("arm");
  if (arm == nullptr) {
    throw ConfigError(path, 0, "missing [arm] section");
  }
  const Vec3 gravity = ini::to_vector(f, require(f, *arm, "gravity"), 3);

  std::vector<LinkParams> links;
  for (const ini::Section* s : f.find_all("link")) {
    LinkParams lk;
    lk.mass = ini::to_double(f, require(f, *s, "mass"));
    lk.com = ini::to_vector(f, require(f, *s, "com"), 3);
    lk.inertia = parse_inertia(f, require(f, *s, "inertia"));
    lk.axis = ini::to_vector(f, require(f, *s, "axis"), 3);
    if (const ini::Entry* e = s->find("transform")) {
      lk.transform = parse_transform(f, *e);
    }
    const VecX limits = ini::to_vector(f, require(f, *s, "limit"), 2);
    lk.limit_lower = limits[0];
    lk.limit_upper = limits[1];
    lk.velocity_limit = ini::to_double(f, require(f, *s, "velocity_limit"));
    lk.torque_limit = ini::to_double(f, require(f, *s, "torque_limit"));
    links.push_back(std::move(lk));
  }
  if (links.empty()) {
    throw ConfigError(path, 0, "model needs at least one [link] section");
  }

  Isometry tool = Isometry::Identity();
  if (const ini::Section* s = f.find("tool")) {
    tool = parse_transform(f, require(f, *s, "transform"));
  }

  try {
    return ArmModel(std::move(links), gravity, tool);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(path, 0, err.what());
  }
}

}  // namespace telesim
