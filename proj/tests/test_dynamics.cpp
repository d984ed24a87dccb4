#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "telesim/dynamics.hpp"
#include "telesim/reference_models.hpp"

using namespace telesim;

namespace {

// The library model mirroring oracles::TwoLinkParams.
const oracles::TwoLinkParams kTwoLink{3.0, 2.0, 0.4, 0.2, 0.15, 0.04, 0.015, 9.81};

VecX random_config(std::mt19937& rng, int n, double range = 2.5) {
  std::uniform_real_distribution<double> dist(-range, range);
  VecX q(n);
  for (int i = 0; i < n; ++i) q[i] = dist(rng);
  return q;
}

}  // namespace

TEST_CASE("one-link mass matrix matches the parallel-axis closed form") {
  // m=2, lc=0.5, Izz=0.1 -> M = Izz + m lc^2 = 0.6 for any q
  const ArmModel model = one_link_pendulum(2.0, 0.5, 0.1);
  for (double q : {0.0, 0.3, -1.2, 2.0}) {
    const MatX m = mass_matrix(model, VecX::Constant(1, q));
    CHECK(m.rows() == 1);
    CHECK(m(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  }
}

TEST_CASE("two-link dynamics match the textbook closed forms") {
  const ArmModel model = two_link_planar();
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const VecX q = random_config(rng, 2);
    const VecX qd = random_config(rng, 2, 3.0);

    const Eigen::Matrix2d m_ref = oracles::two_link_mass_matrix(kTwoLink, q[1]);
    const MatX m = mass_matrix(model, q);
    CHECK((m - m_ref).norm() <= 1e-9);

    const Eigen::Vector2d bias_ref = oracles::two_link_bias(kTwoLink, q, qd);
    const VecX bias = bias_forces(model, JointState(q, qd));
    CHECK((bias - bias_ref).norm() <= 1e-9);
  }
}

TEST_CASE("mass matrix is symmetric positive definite across models") {
  std::mt19937 rng(21);
  const ArmModel models[] = {one_link_pendulum(), two_link_planar(),
                             three_link_planar(), seven_dof_arm()};
  for (const ArmModel& model : models) {
    for (int trial = 0; trial < 2500; ++trial) {
      const VecX q = random_config(rng, model.dof());
      const MatX m = mass_matrix(model, q);
      CHECK((m - m.transpose()).norm() <= 1e-10);
      Eigen::LLT<MatX> llt(m);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("gravity equals bias at rest and the potential-energy gradient") {
  const ArmModel model = three_link_planar();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const VecX q = random_config(rng, 3);

    const VecX g = gravity_torques(model, q);
    const VecX bias = bias_forces(model, JointState(q, VecX::Zero(3)));
    CHECK((g - bias).norm() == 0.0);  // identical code path by construction

    for (int j = 0; j < 3; ++j) {
      const double dv = oracles::finite_difference(
          [&](double qj) {
            VecX qp = q;
            qp[j] = qj;
            return potential_energy(model, qp);
          },
          q[j]);
      CHECK(std::abs(g[j] - dv) <= 1e-6);
    }
  }
}

TEST_CASE("pendulum gravity torque at the horizontal") {
  // m=1, lc=0.5, q=0 (horizontal): G = m g lc cos(q) = 4.905
  const ArmModel model = one_link_pendulum(1.0, 0.5, 1.0 / 12.0);
  const VecX g = gravity_torques(model, VecX::Zero(1));
  CHECK(g[0] == doctest::Approx(4.905).epsilon(1e-12));

  // vertical: no gravity torque
  const VecX g_up = gravity_torques(model, VecX::Constant(1, M_PI / 2.0));
  CHECK(std::abs(g_up[0]) <= 1e-12);
}

TEST_CASE("zero gravity model produces zero gravity torques") {
  const ArmModel model = one_link_pendulum(1.0, 0.5, 1.0 / 12.0, 1.0, 0.0);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const VecX q = random_config(rng, 1);
    CHECK(gravity_torques(model, q).norm() == 0.0);
  }
}

TEST_CASE("one-link forward kinematics and jacobian geometry") {
  const ArmModel model = one_link_pendulum();

  const TaskPose at_zero = forward_kinematics(model, VecX::Zero(1));
  CHECK((at_zero.position - Vec3(1, 0, 0)).norm() <= 1e-12);

  const TaskPose at_quarter = forward_kinematics(model, VecX::Constant(1, M_PI / 2.0));
  CHECK((at_quarter.position - Vec3(0, 1, 0)).norm() <= 1e-12);

  const Jacobian j = jacobian(model, VecX::Zero(1));
  CHECK((j.col(0).head<3>() - Vec3(0, 1, 0)).norm() <= 1e-12);  // tip moves +y
  CHECK((j.col(0).tail<3>() - Vec3(0, 0, 1)).norm() <= 1e-12);  // about +z
}

TEST_CASE("forward kinematics at q=0 composes the fixed transforms") {
  const ArmModel model = three_link_planar();
  const TaskPose pose = forward_kinematics(model, VecX::Zero(3));
  // 0.3 + 0.25 + 0.2 along x, base column 0.15 in z, no rotation
  CHECK((pose.position - Vec3(0.75, 0, 0.15)).norm() <= 1e-12);
  CHECK(pose.orientation.angularDistance(Quat::Identity()) <= 1e-12);
}

TEST_CASE("orientation stays unit norm over random configurations") {
  const ArmModel model = seven_dof_arm();
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10000; ++trial) {
    const VecX q = random_config(rng, 7, 2.0);
    const TaskPose pose = forward_kinematics(model, q);
    CHECK(std::abs(pose.orientation.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("jacobian matches finite differences of forward kinematics") {
  const ArmModel models[] = {two_link_planar(), three_link_planar(), seven_dof_arm()};
  std::mt19937 rng(13);
  for (const ArmModel& model : models) {
    for (int trial = 0; trial < 50; ++trial) {
      const VecX q = random_config(rng, model.dof(), 1.5);
      const VecX qd = random_config(rng, model.dof(), 1.0);
      const Jacobian j = jacobian(model, q);
      const Vec6 xdot = j * qd;

      const double h = 1e-6;
      const TaskPose plus = forward_kinematics(model, q + h * qd);
      const TaskPose minus = forward_kinematics(model, q - h * qd);
      const Vec3 lin_fd = (plus.position - minus.position) / (2.0 * h);
      const Vec3 ang_fd =
          rotation_vector(plus.orientation * minus.orientation.conjugate()) / (2.0 * h);

      CHECK((xdot.head<3>() - lin_fd).norm() <= 1e-6);
      CHECK((xdot.tail<3>() - ang_fd).norm() <= 1e-6);
    }
  }
}

TEST_CASE("inertia matrix rate satisfies the skew-symmetry property") {
  // C built from Christoffel symbols of a numerically differentiated M must
  // make (Mdot - 2C) skew-symmetric.
  const ArmModel model = three_link_planar();
  std::mt19937 rng(17);
  const int n = model.dof();
  const double h = 1e-6;

  for (int trial = 0; trial < 25; ++trial) {
    const VecX q = random_config(rng, n);
    const VecX qd = random_config(rng, n, 2.0);

    const auto dm_dq = [&](int k) {
      VecX qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      return MatX((mass_matrix(model, qp) - mass_matrix(model, qm)) / (2.0 * h));
    };

    std::vector<MatX> partials(n);
    for (int k = 0; k < n; ++k) partials[k] = dm_dq(k);

    MatX mdot = MatX::Zero(n, n);
    for (int k = 0; k < n; ++k) mdot += partials[k] * qd[k];

    MatX c = MatX::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          c(i, j) += 0.5 *
                     (partials[k](i, j) + partials[j](i, k) - partials[i](j, k)) * qd[k];
        }
      }
    }

    const MatX skew = (mdot - 2.0 * c) + (mdot - 2.0 * c).transpose();
    CHECK(skew.norm() <= 1e-5);
  }
}

TEST_CASE("static equilibrium holds under gravity compensation") {
  const ArmModel model = three_link_planar();
  JointState state(Vec3(0.4, -0.7, 0.5), Vec3::Zero());
  for (int i = 0; i < 1000; ++i) {
    state = step(model, state, gravity_torques(model, state.q), Wrench::zero(), 1e-3);
  }
  CHECK((state.q - Vec3(0.4, -0.7, 0.5)).norm() <= 1e-9);
  CHECK(state.qd.norm() <= 1e-9);
}

TEST_CASE("step with dt=0 returns the input state") {
  const ArmModel model = two_link_planar();
  const JointState state(Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(1.0, 0.5));
  const JointState out = step(model, state, VecX::Zero(2), Wrench::zero(), 0.0);
  CHECK(out.q == state.q);
  CHECK(out.qd == state.qd);
}

TEST_CASE("small pendulum oscillation matches the analytic period") {
  // Undamped pendulum around the hanging equilibrium q = -pi/2.
  const double m = 1.0, lc = 0.5, izz = 1.0 / 12.0;
  const ArmModel model = one_link_pendulum(m, lc, izz);
  const double inertia_pivot = izz + m * lc * lc;
  const double period = 2.0 * M_PI * std::sqrt(inertia_pivot / (m * 9.81 * lc));

  const double amplitude = 0.02;
  JointState state(VecX::Constant(1, -M_PI / 2.0 + amplitude), VecX::Zero(1));
  const double dt = 1e-3;

  // Count zero crossings of (q + pi/2) over ten periods.
  int crossings = 0;
  double t = 0.0, t_last_crossing = 0.0, first_crossing = 0.0;
  double prev = state.q[0] + M_PI / 2.0;
  while (t < 10.5 * period) {
    state = step(model, state, VecX::Zero(1), Wrench::zero(), dt);
    t += dt;
    const double cur = state.q[0] + M_PI / 2.0;
    if (prev > 0.0 && cur <= 0.0) {
      if (crossings == 0) {
        first_crossing = t;
      }
      t_last_crossing = t;
      ++crossings;
    }
    prev = cur;
  }
  REQUIRE(crossings >= 10);
  const double measured = (t_last_crossing - first_crossing) / (crossings - 1);
  CHECK(measured == doctest::Approx(period).epsilon(0.01));
}

TEST_CASE("unforced zero-gravity chain conserves kinetic energy") {
  ArmModel model = [] {
    // three_link_planar with gravity removed
    const ArmModel base = three_link_planar();
    return ArmModel(base.links(), Vec3::Zero(), base.tool_transform());
  }();

  JointState state(Vec3(0.3, -0.5, 0.8), Vec3(0.7, -0.4, 0.9));
  const double e0 = kinetic_energy(model, state);
  REQUIRE(e0 > 0.0);
  for (int i = 0; i < 10000; ++i) {
    state = step(model, state, VecX::Zero(3), Wrench::zero(), 1e-3);
  }
  const double e1 = kinetic_energy(model, state);
  CHECK(std::abs(e1 - e0) / e0 <= 1e-3);
}

TEST_CASE("external wrench enters through the jacobian transpose") {
  const ArmModel model = one_link_pendulum(1.0, 0.5, 1.0 / 12.0, 1.0, 0.0);
  // Pushing the tip along +y at q=0 torques the joint by +1*Fy.
  Wrench push;
  push.force = Vec3(0, 2.0, 0);
  const VecX qdd = forward_acceleration(model, JointState::zero(1), VecX::Zero(1), push);
  const double inertia_pivot = 1.0 / 12.0 + 0.25;
  CHECK(qdd[0] == doctest::Approx(2.0 / inertia_pivot).epsilon(1e-10));
}

TEST_CASE("dimension mismatches are rejected") {
  const ArmModel model = two_link_planar();
  CHECK_THROWS_AS(mass_matrix(model, VecX::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(gravity_torques(model, VecX::Zero(1)), std::invalid_argument);
  CHECK_THROWS_AS(jacobian(model, VecX::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(step(model, JointState::zero(2), VecX::Zero(3), Wrench::zero(), 1e-3),
                  std::invalid_argument);
}

TEST_CASE("model invariants are validated at construction") {
  LinkParams bad = one_link_pendulum().link(0);
  bad.mass = -1.0;
  CHECK_THROWS_AS(ArmModel({bad}, Vec3::Zero()), std::invalid_argument);

  bad = one_link_pendulum().link(0);
  bad.axis = Vec3(0, 0, 2.0);
  CHECK_THROWS_AS(ArmModel({bad}, Vec3::Zero()), std::invalid_argument);

  bad = one_link_pendulum().link(0);
  bad.limit_lower = 1.0;
  bad.limit_upper = -1.0;
  CHECK_THROWS_AS(ArmModel({bad}, Vec3::Zero()), std::invalid_argument);

  bad = one_link_pendulum().link(0);
  bad.inertia = -Mat3::Identity();
  CHECK_THROWS_AS(ArmModel({bad}, Vec3::Zero()), std::invalid_argument);
}
