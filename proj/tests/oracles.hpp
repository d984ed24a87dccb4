#pragma once

// Independent reference computations for the test suites. Everything here is
// closed-form or finite-difference based and shares no code path with the
// library's dynamics algorithms.

#include <Eigen/Dense>

#include <cmath>

namespace oracles {

// Parameters of a planar 2-link chain: joints about +z, links along +x at
// q = 0, gravity of magnitude g acting along -y.
struct TwoLinkParams {
  double m1, m2;    // link masses
  double l1;        // first link length (joint 1 -> joint 2)
  double lc1, lc2;  // COM offsets along the links
  double izz1, izz2;  // rotational inertias about the COMs
  double g;
};

// Standard textbook closed forms for the planar 2R chain.
inline Eigen::Matrix2d two_link_mass_matrix(const TwoLinkParams& p, double q2) {
  const double a = p.izz1 + p.izz2 + p.m1 * p.lc1 * p.lc1 +
                   p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2);
  const double b = p.m2 * p.l1 * p.lc2;
  const double d = p.izz2 + p.m2 * p.lc2 * p.lc2;
  Eigen::Matrix2d m;
  m(0, 0) = a + 2.0 * b * std::cos(q2);
  m(0, 1) = d + b * std::cos(q2);
  m(1, 0) = m(0, 1);
  m(1, 1) = d;
  return m;
}

inline Eigen::Vector2d two_link_coriolis(const TwoLinkParams& p, double q2,
                                         double qd1, double qd2) {
  const double h = -p.m2 * p.l1 * p.lc2 * std::sin(q2);
  Eigen::Vector2d c;
  c(0) = 2.0 * h * qd1 * qd2 + h * qd2 * qd2;
  c(1) = -h * qd1 * qd1;
  return c;
}

inline Eigen::Vector2d two_link_gravity(const TwoLinkParams& p, double q1, double q2) {
  Eigen::Vector2d g;
  g(0) = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * std::cos(q1) +
         p.m2 * p.lc2 * p.g * std::cos(q1 + q2);
  g(1) = p.m2 * p.lc2 * p.g * std::cos(q1 + q2);
  return g;
}

inline Eigen::Vector2d two_link_bias(const TwoLinkParams& p, const Eigen::Vector2d& q,
                                     const Eigen::Vector2d& qd) {
  return two_link_coriolis(p, q(1), qd(0), qd(1)) + two_link_gravity(p, q(0), q(1));
}

// Central finite difference of a scalar function of one joint.
template <typename F>
double finite_difference(F&& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles
