#pragma once

#include <cstdint>
#include <span>

#include "telesim/types.hpp"

namespace telesim {

/// Wave impedance per coupled DoF. One scalar b > 0 per channel lane.
struct WaveConfig {
  VecX impedance;

  int dof() const { return static_cast<int>(impedance.size()); }
  void validate() const;
  static WaveConfig uniform(int dof, double b);
};

enum class WaveDirection : std::uint8_t {
  MasterToSlave = 0,  // u
  SlaveToMaster = 1,  // v
};

/// One wave-domain sample, units sqrt(W) per DoF.
struct WaveSample {
  VecX values;
  WaveDirection direction = WaveDirection::MasterToSlave;
  std::uint32_t seq = 0;
  double stamp = 0.0;
};

/// Velocity/force pair into the wave domain: u = (b v + F) / sqrt(2b).
WaveSample encode(const VecX& velocity, const VecX& force, const WaveConfig& cfg,
                  WaveDirection direction, std::uint32_t seq, double stamp);

struct WaveDecode {
  VecX velocity;        // commanded velocity at this port
  WaveSample outgoing;  // return wave, direction flipped, seq/stamp copied
};

/// Admittance-form junction (slave side): given the incoming wave and the
/// locally measured force,
///   v_cmd = (sqrt(2b) u - F) / b,   w_out = u - sqrt(2/b) F.
WaveDecode decode(const WaveSample& incoming, const VecX& local_force,
                  const WaveConfig& cfg);

struct WaveForceDecode {
  VecX force;           // force to render at this port
  WaveSample outgoing;  // forward wave, direction flipped, seq/stamp copied
};

/// Impedance-form junction (master side): given the incoming wave and the
/// local port velocity,
///   F = b v - sqrt(2b) w_in,   w_out = sqrt(2b) v - w_in.
/// Same algebra as decode() with the roles of effort and flow exchanged; the
/// per-sample power identity F·v = (w_out^2 - w_in^2)/2 holds per DoF.
WaveForceDecode decode_force(const WaveSample& incoming, const VecX& local_velocity,
                             const WaveConfig& cfg);

/// Loss policy: a dropped or missing sample is replaced by zero wave content.
/// Injects no energy, so the channel stays passive under any drop pattern.
WaveSample missing_sample(const WaveConfig& cfg, WaveDirection direction,
                          std::uint32_t seq, double stamp);

/// Energy bookkeeping for one port pair. dissipated() counts wave energy sent
/// but not (yet) consumed: in-flight samples, drops, and discarded stale
/// samples all land there, so it is nonnegative at every step for a channel
/// that only delays, drops, or reorders.
struct EnergyLedger {
  double e_in = 0.0;
  double e_out = 0.0;

  double dissipated() const { return e_in - e_out; }
};

/// Wave energy carried by one sample over one tick: ||values||^2 dt / 2.
double sample_energy(const WaveSample& sample, double dt);

/// Accumulates sent samples into e_in and consumed samples into e_out.
EnergyLedger energy_update(EnergyLedger ledger, std::span<const WaveSample> sent,
                           std::span<const WaveSample> received, double dt);

}  // namespace telesim
