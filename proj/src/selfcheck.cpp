#include "telesim/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "telesim/control.hpp"
#include "telesim/dynamics.hpp"
#include "telesim/netsim.hpp"
#include "telesim/reference_models.hpp"
#include "telesim/wave.hpp"

namespace telesim {

namespace {

std::string format_max(const char* what, double value, double tolerance) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s max %.3e (tolerance %.0e)", what, value, tolerance);
  return buf;
}

// Textbook closed forms for the bundled two-link chain; independent of the
// spatial-algebra implementation.
CheckResult check_two_link() {
  const double m1 = 3.0, m2 = 2.0, l1 = 0.4, lc1 = 0.2, lc2 = 0.15;
  const double i1 = 0.04, i2 = 0.015, g = 9.81;
  const ArmModel model = two_link_planar();

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> dist(-2.5, 2.5);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const double q1 = dist(rng), q2 = dist(rng);
    const double qd1 = dist(rng), qd2 = dist(rng);

    const double a = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2);
    const double b = m2 * l1 * lc2;
    const double d = i2 + m2 * lc2 * lc2;
    Eigen::Matrix2d m_ref;
    m_ref << a + 2 * b * std::cos(q2), d + b * std::cos(q2), d + b * std::cos(q2), d;

    const double h = -m2 * l1 * lc2 * std::sin(q2);
    Eigen::Vector2d bias_ref;
    bias_ref << 2 * h * qd1 * qd2 + h * qd2 * qd2 +
                    (m1 * lc1 + m2 * l1) * g * std::cos(q1) +
                    m2 * lc2 * g * std::cos(q1 + q2),
        -h * qd1 * qd1 + m2 * lc2 * g * std::cos(q1 + q2);

    VecX q(2), qd(2);
    q << q1, q2;
    qd << qd1, qd2;
    worst = std::max(worst, (mass_matrix(model, q) - m_ref).norm());
    worst = std::max(worst,
                     (bias_forces(model, JointState(q, qd)) - VecX(bias_ref)).norm());
  }
  return {"two-link closed form", worst <= 1e-9,
          format_max("closed-form deviation", worst, 1e-9)};
}

CheckResult check_wave_transform() {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  double worst = 0.0;
  for (double b : {0.1, 1.0, 10.0}) {
    const WaveConfig cfg = WaveConfig::uniform(3, b);
    for (int trial = 0; trial < 500; ++trial) {
      VecX velocity(3), force(3);
      for (int i = 0; i < 3; ++i) {
        velocity[i] = dist(rng);
        force[i] = dist(rng);
      }
      const WaveSample u =
          encode(velocity, force, cfg, WaveDirection::MasterToSlave, 0, 0.0);
      const WaveDecode d = decode(u, force, cfg);
      worst = std::max(worst, (d.velocity - velocity).norm());
      for (int i = 0; i < 3; ++i) {
        const double power = 0.5 * u.values[i] * u.values[i] -
                             0.5 * d.outgoing.values[i] * d.outgoing.values[i];
        worst = std::max(worst, std::abs(power - force[i] * d.velocity[i]));
      }
    }
  }
  return {"wave transform identities", worst <= 1e-12,
          format_max("round-trip/power deviation", worst, 1e-12)};
}

CheckResult check_codec(const SelfcheckOptions& options) {
  static const std::vector<std::uint8_t> kGolden = {
      0x57, 0x41, 0x56, 0x45, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x93, 0x50, 0xb8, 0x09};
  const std::vector<std::uint8_t>& golden =
      options.golden_override != nullptr ? *options.golden_override : kGolden;

  Packet reference;
  reference.channel_id = 0;
  reference.flags = 0;
  reference.seq = 1;
  reference.stamp_ns = 0;
  reference.payload = {0.0};

  bool ok = encode_packet(reference) == golden;
  std::string detail = ok ? "golden bytes match" : "golden bytes mismatch";
  try {
    ok = ok && decode_packet(golden) == reference;
  } catch (const CodecError& err) {
    ok = false;
    detail = std::string("golden decode failed: ") + err.what();
  }

  // Error-path coverage: each corruption must raise the matching error.
  const std::vector<std::uint8_t> bytes = encode_packet(reference);
  const auto expect = [&](auto mutate, auto check_throw) {
    auto bad = bytes;
    mutate(bad);
    try {
      decode_packet(bad);
      return false;
    } catch (const std::exception& err) {
      return check_throw(err);
    }
  };
  ok = ok && expect([](auto& b) { b[0] ^= 0xFF; },
                    [](const auto& e) { return dynamic_cast<const BadMagic*>(&e) != nullptr; });
  ok = ok && expect([](auto& b) { b[4] = 7; },
                    [](const auto& e) { return dynamic_cast<const BadVersion*>(&e) != nullptr; });
  ok = ok && expect([](auto& b) { b[24] ^= 0x01; },
                    [](const auto& e) { return dynamic_cast<const BadCrc*>(&e) != nullptr; });
  ok = ok && expect([](auto& b) { b.resize(b.size() - 3); },
                    [](const auto& e) { return dynamic_cast<const Truncated*>(&e) != nullptr; });

  return {"wire codec goldens", ok, detail};
}

CheckResult check_annihilation(const SelfcheckOptions& options) {
  const ArmModel model = three_link_planar();
  VecX q0(3);
  q0 << -0.6, 1.2, 0.7;
  GainSet gains = GainSet::defaults(model, q0);
  gains.task_rows = {true, false, true, false, false, false};

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    VecX q(3), qd(3);
    for (int i = 0; i < 3; ++i) {
      q[i] = dist(rng);
      qd[i] = dist(rng);
    }
    const VecX tau = nullspace_torque(model, JointState(q, qd), gains);
    const Jacobian j = jacobian(model, q);
    Eigen::Matrix<double, 2, 3> jt;
    jt.row(0) = j.row(0);
    jt.row(1) = j.row(2);
    worst = std::max(worst, (jt * tau).norm() / (1.0 + tau.norm()));
  }
  return {"nullspace annihilation", worst <= options.annihilation_tolerance,
          format_max("|J tau| / (1+|tau|)", worst, options.annihilation_tolerance)};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(check_two_link());
  results.push_back(check_wave_transform());
  results.push_back(check_codec(options));
  results.push_back(check_annihilation(options));
  return results;
}

}  // namespace telesim
