#pragma once

// 6-D spatial-vector algebra for the serial-chain dynamics algorithms.
// Convention: angular components first, Plücker coordinates per Featherstone.
// Internal header, not installed.

#include <Eigen/Dense>

namespace telesim::spatial {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Coordinate transform for motion vectors from frame A to frame B, where the
// B frame origin sits at r (expressed in A) and E rotates A-coordinates into
// B-coordinates: X = [E 0; -E*skew(r) E].
struct Transform {
  Mat3 E = Mat3::Identity();
  Vec3 r = Vec3::Zero();

  Vec6 apply_motion(const Vec6& m) const {
    Vec6 out;
    const Vec3 w = m.head<3>();
    const Vec3 v = m.tail<3>();
    out.head<3>() = E * w;
    out.tail<3>() = E * (v - r.cross(w));
    return out;
  }

  // f_A = X^T f_B for force vectors.
  Vec6 apply_force_transpose(const Vec6& f) const {
    Vec6 out;
    const Vec3 n = f.head<3>();
    const Vec3 fl = f.tail<3>();
    const Vec3 fa = E.transpose() * fl;
    out.head<3>() = E.transpose() * n + r.cross(fa);
    out.tail<3>() = fa;
    return out;
  }

  Mat6 motion_matrix() const {
    Mat6 x = Mat6::Zero();
    x.topLeftCorner<3, 3>() = E;
    x.bottomLeftCorner<3, 3>() = -E * skew(r);
    x.bottomRightCorner<3, 3>() = E;
    return x;
  }

  // Composition: (X2 * X1) maps A -> C when X1 maps A -> B and X2 maps B -> C.
  friend Transform operator*(const Transform& x2, const Transform& x1) {
    Transform out;
    out.E = x2.E * x1.E;
    out.r = x1.r + x1.E.transpose() * x2.r;
    return out;
  }
};

// Spatial cross products, v = [w; vlin].
inline Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 out;
  const Vec3 w = v.head<3>(), vl = v.tail<3>();
  out.head<3>() = w.cross(m.head<3>());
  out.tail<3>() = w.cross(m.tail<3>()) + vl.cross(m.head<3>());
  return out;
}

inline Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 out;
  const Vec3 w = v.head<3>(), vl = v.tail<3>();
  out.head<3>() = w.cross(f.head<3>()) + vl.cross(f.tail<3>());
  out.tail<3>() = w.cross(f.tail<3>());
  return out;
}

// Spatial inertia about the link-frame origin as a dense 6x6:
//   [ Ic + m*cx*cx^T, m*cx; m*cx^T, m*I3 ]
inline Mat6 spatial_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  const Mat3 cx = skew(com);
  Mat6 I = Mat6::Zero();
  I.topLeftCorner<3, 3>() = inertia_com + mass * cx * cx.transpose();
  I.topRightCorner<3, 3>() = mass * cx;
  I.bottomLeftCorner<3, 3>() = mass * cx.transpose();
  I.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return I;
}

}  // namespace telesim::spatial
