#include "telesim/wave.hpp"

#include <stdexcept>

namespace telesim {

namespace {

void require_finite(const VecX& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

void require_dof(const WaveConfig& cfg, const VecX& v, const char* what) {
  if (v.size() != cfg.dof()) {
    throw std::invalid_argument(std::string(what) + ": DoF mismatch");
  }
}

}  // namespace

void WaveConfig::validate() const {
  if (impedance.size() == 0 || impedance.minCoeff() <= 0.0) {
    throw std::invalid_argument("WaveConfig: impedance entries must be > 0");
  }
}

WaveConfig WaveConfig::uniform(int dof, double b) {
  WaveConfig cfg{VecX::Constant(dof, b)};
  cfg.validate();
  return cfg;
}

WaveSample encode(const VecX& velocity, const VecX& force, const WaveConfig& cfg,
                  WaveDirection direction, std::uint32_t seq, double stamp) {
  cfg.validate();
  require_dof(cfg, velocity, "wave encode velocity");
  require_dof(cfg, force, "wave encode force");
  require_finite(velocity, "wave encode velocity");
  require_finite(force, "wave encode force");

  WaveSample out;
  out.values = (cfg.impedance.cwiseProduct(velocity) + force)
                   .cwiseQuotient((2.0 * cfg.impedance).cwiseSqrt());
  out.direction = direction;
  out.seq = seq;
  out.stamp = stamp;
  return out;
}

WaveDecode decode(const WaveSample& incoming, const VecX& local_force,
                  const WaveConfig& cfg) {
  cfg.validate();
  require_dof(cfg, incoming.values, "wave decode sample");
  require_dof(cfg, local_force, "wave decode force");
  require_finite(incoming.values, "wave decode sample");
  require_finite(local_force, "wave decode force");

  const VecX root = (2.0 * cfg.impedance).cwiseSqrt();
  WaveDecode out;
  out.velocity = (root.cwiseProduct(incoming.values) - local_force)
                     .cwiseQuotient(cfg.impedance);
  out.outgoing.values =
      incoming.values - (2.0 / cfg.impedance.array()).sqrt().matrix().cwiseProduct(local_force);
  out.outgoing.direction = incoming.direction == WaveDirection::MasterToSlave
                               ? WaveDirection::SlaveToMaster
                               : WaveDirection::MasterToSlave;
  out.outgoing.seq = incoming.seq;
  out.outgoing.stamp = incoming.stamp;
  return out;
}

WaveForceDecode decode_force(const WaveSample& incoming, const VecX& local_velocity,
                             const WaveConfig& cfg) {
  cfg.validate();
  require_dof(cfg, incoming.values, "wave decode_force sample");
  require_dof(cfg, local_velocity, "wave decode_force velocity");
  require_finite(incoming.values, "wave decode_force sample");
  require_finite(local_velocity, "wave decode_force velocity");

  const VecX root = (2.0 * cfg.impedance).cwiseSqrt();
  WaveForceDecode out;
  out.force = cfg.impedance.cwiseProduct(local_velocity) -
              root.cwiseProduct(incoming.values);
  out.outgoing.values = root.cwiseProduct(local_velocity) - incoming.values;
  out.outgoing.direction = incoming.direction == WaveDirection::MasterToSlave
                               ? WaveDirection::SlaveToMaster
                               : WaveDirection::MasterToSlave;
  out.outgoing.seq = incoming.seq;
  out.outgoing.stamp = incoming.stamp;
  return out;
}

WaveSample missing_sample(const WaveConfig& cfg, WaveDirection direction,
                          std::uint32_t seq, double stamp) {
  WaveSample out;
  out.values = VecX::Zero(cfg.dof());
  out.direction = direction;
  out.seq = seq;
  out.stamp = stamp;
  return out;
}

double sample_energy(const WaveSample& sample, double dt) {
  return 0.5 * sample.values.squaredNorm() * dt;
}

EnergyLedger energy_update(EnergyLedger ledger, std::span<const WaveSample> sent,
                           std::span<const WaveSample> received, double dt) {
  if (dt <= 0.0) {
    throw std::invalid_argument("energy_update: dt must be > 0");
  }
  for (const WaveSample& s : sent) {
    ledger.e_in += sample_energy(s, dt);
  }
  for (const WaveSample& s : received) {
    ledger.e_out += sample_energy(s, dt);
  }
  return ledger;
}

}  // namespace telesim
