#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "telesim/arm_model.hpp"
#include "telesim/control.hpp"
#include "telesim/dynamics.hpp"
#include "telesim/netsim.hpp"
#include "telesim/types.hpp"
#include "telesim/wave.hpp"

namespace telesim {

// ---------------------------------------------------------------------------
// Supervisor state machine
// ---------------------------------------------------------------------------

enum class FaultKind { PositionLimit, VelocityLimit, TorqueSaturationPersistent };
enum class SessionPhase { Operational, Fault, Recovering };

const char* to_string(FaultKind kind);
const char* to_string(SessionPhase phase);

struct FaultEvent {
  FaultKind kind;
  int joint;
  double t;
};

/// Owns the Operational -> Fault -> Recovering -> Operational cycle and
/// rejects every other transition. A recovery timeout ends in a terminal
/// unrecoverable Fault.
class SessionSupervisor {
 public:
  SessionPhase phase() const { return phase_; }
  std::optional<FaultKind> fault() const { return fault_; }
  double progress() const { return progress_; }
  bool unrecoverable() const { return unrecoverable_; }

  void trigger_fault(FaultKind kind);
  void begin_recovery();
  void set_progress(double p);
  void complete_recovery();
  void fail_recovery();

 private:
  SessionPhase phase_ = SessionPhase::Operational;
  std::optional<FaultKind> fault_;
  double progress_ = 0.0;
  bool unrecoverable_ = false;
};

/// Per-tick limit monitor with a persistence window for torque saturation.
class ErrorMonitor {
 public:
  explicit ErrorMonitor(double saturation_window = 0.1)
      : window_(saturation_window) {}

  std::optional<FaultEvent> check(const ArmModel& model, const JointState& state,
                                  bool saturated, double t);
  void reset() { saturated_since_ = -1.0; }

 private:
  double window_;
  double saturated_since_ = -1.0;
};

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

/// Half-space obstacle: points with normal·p < offset are penetrating.
struct PlaneObstacle {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  double stiffness = 1e4;  // N/m
  double damping = 50.0;   // N·s/m
};

struct ContactEnvironment {
  std::vector<PlaneObstacle> planes;
};

/// Penalty spring-damper normal force for penetrated planes; the normal force
/// is clipped at zero so pull-out never attracts.
Wrench contact_wrench(const ContactEnvironment& env, const TaskPose& ee,
                      const TaskTwist& velocity);

// ---------------------------------------------------------------------------
// Coupling rules
// ---------------------------------------------------------------------------

struct CouplingMap {
  Vec3 scale = Vec3::Ones();
  Vec3 master_home = Vec3::Zero();
  Vec3 slave_home = Vec3::Zero();
  Quat master_rot_home = Quat::Identity();
  Quat slave_rot_home = Quat::Identity();
};

/// Master pose/twist to slave setpoints: translation offset-mapped and scaled
/// in the base frame; the rotation delta from the master home is passed
/// through as feedforward on top of the slave home orientation.
std::pair<TaskPose, TaskTwist> couple_setpoints(const TaskPose& master_pose,
                                                const TaskTwist& master_twist,
                                                const CouplingMap& map);

/// Master force command from the slave contact wrench: translation only, the
/// rotational components carry no force feedback.
Vec3 feedback_wrench(const Wrench& slave_contact);

// ---------------------------------------------------------------------------
// Operator script
// ---------------------------------------------------------------------------

struct PoseWaypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

struct GripWaypoint {
  double t = 0.0;
  Vec3 angles = Vec3::Zero();
};

struct FootplateWaypoint {
  double t = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  Eigen::Matrix<double, 5, 1> pressures = Eigen::Matrix<double, 5, 1>::Zero();
};

/// Piecewise-quintic waypoint script (zero boundary velocity/acceleration per
/// segment) for the hand, the glove, and a zero-order-hold footplate track.
class OperatorScript {
 public:
  std::vector<PoseWaypoint> pose_waypoints;
  std::vector<GripWaypoint> grip_waypoints;
  std::vector<FootplateWaypoint> footplate_waypoints;

  void validate() const;
  void sample_pose(double t, Vec3& position, Vec3& velocity, Quat& orientation) const;
  void sample_grip(double t, Vec3& q, Vec3& qd) const;
  FootplateWaypoint sample_footplate(double t) const;
};

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

/// Where the packets actually travel: the deterministic simulated channel by
/// default, real UDP sockets in integration mode.
class PacketTransport {
 public:
  virtual ~PacketTransport() = default;
  virtual void to_slave(Packet p, double now) = 0;
  virtual std::vector<Packet> at_slave(double now) = 0;
  virtual void to_master(Packet p, double now) = 0;
  virtual std::vector<Packet> at_master(double now) = 0;
};

class SimulatedTransport : public PacketTransport {
 public:
  SimulatedTransport(const ChannelConfig& to_slave, const ChannelConfig& to_master)
      : to_slave_(to_slave), to_master_(to_master) {}

  void to_slave(Packet p, double now) override { to_slave_.send(std::move(p), now); }
  std::vector<Packet> at_slave(double now) override { return to_slave_.poll(now); }
  void to_master(Packet p, double now) override { to_master_.send(std::move(p), now); }
  std::vector<Packet> at_master(double now) override { return to_master_.poll(now); }

  const SimulatedChannel& slave_channel() const { return to_slave_; }
  const SimulatedChannel& master_channel() const { return to_master_; }

 private:
  SimulatedChannel to_slave_;
  SimulatedChannel to_master_;
};

/// In-process loopback over two real UDP sockets.
class UdpLoopbackTransport : public PacketTransport {
 public:
  UdpLoopbackTransport(const std::string& host, std::uint16_t master_port,
                       std::uint16_t slave_port);

  void to_slave(Packet p, double now) override;
  std::vector<Packet> at_slave(double now) override;
  void to_master(Packet p, double now) override;
  std::vector<Packet> at_master(double now) override;

 private:
  UdpEndpoint master_side_;
  UdpEndpoint slave_side_;
};

/// One side of a split-process session: the local socket plays both roles.
class UdpPeerTransport : public PacketTransport {
 public:
  UdpPeerTransport(const std::string& bind_host, std::uint16_t bind_port,
                   const std::string& peer_host, std::uint16_t peer_port);

  void to_slave(Packet p, double now) override;
  std::vector<Packet> at_slave(double now) override;
  void to_master(Packet p, double now) override;
  std::vector<Packet> at_master(double now) override;

 private:
  UdpEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

enum class CouplingMode { Wave, Direct };

struct MasterParams {
  double mass = 0.10;             // kg, low-inertia translation stage
  double damping = 5.0;           // N·s/m
  double hand_stiffness = 400.0;  // operator arm holding the handle
  double hand_damping = 30.0;
  double grip_inertia = 0.004;  // kg·m² per glove DoF
  double grip_damping = 0.02;
  double grip_hand_stiffness = 6.0;
  double grip_hand_damping = 0.4;
};

struct FootplateParams {
  double pressure_threshold = 20.0;
  double deadband = 0.05;
  double max_tilt = 0.30;
  TaskTwist max_twist;
};

struct SessionConfig {
  ArmModel arm;
  GainSet gains;
  MasterParams master;
  CouplingMode mode = CouplingMode::Wave;
  WaveConfig wave;  // 6 lanes: 3 translation + 3 gripper
  Vec3 grip_stiffness = Vec3::Constant(8.0);
  Vec3 grip_damping = Vec3::Constant(0.4);
  double slave_grip_inertia = 0.006;
  double slave_grip_damping = 0.05;
  ChannelConfig to_slave;
  ChannelConfig to_master;
  ContactEnvironment environment;
  OperatorScript script;
  FootplateParams footplate;
  double payload_mass = 0.0;
  double payload_time = std::numeric_limits<double>::infinity();
  double tick = 1e-3;
  VecX start_posture;  // empty -> gains.posture
  double workspace_scale = 1.0;
  double recovery_duration = 3.0;
  double recovery_timeout = 10.0;
  double recovery_pos_tol = 0.02;
  double recovery_vel_tol = 0.05;
  VecX recovery_kp;  // empty -> default
  VecX recovery_kd;
  double saturation_window = 0.1;
  double divergence_threshold = 5.0;  // J of net channel-generated energy

  explicit SessionConfig(ArmModel arm_model);
};

struct MetricsRecord {
  double t = 0.0;
  double tracking_error = 0.0;
  Vec3 felt_force = Vec3::Zero();
  double channel_energy = 0.0;
  SessionPhase mode = SessionPhase::Operational;
  std::optional<FaultKind> fault;
  TaskTwist base_twist;
};

struct MasterState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 rendered_force = Vec3::Zero();
  GripperState glove;
  Vec3 glove_rendered = Vec3::Zero();
};

struct WavePolicyStats {
  std::uint64_t zero_fills_at_slave = 0;
  std::uint64_t zero_fills_at_master = 0;
  std::uint64_t stale_discards = 0;
};

/// One deterministic bilateral-teleoperation loop: scripted operator, master
/// device surrogate, impaired channel, slave arm with the composed controller,
/// contact environment, error supervisor, and metrics.
class Session {
 public:
  explicit Session(SessionConfig cfg);
  Session(SessionConfig cfg, std::unique_ptr<PacketTransport> transport);

  MetricsRecord run_tick();
  std::vector<MetricsRecord> run(double duration);

  /// Split-process integration mode: advance only one side of the loop.
  MetricsRecord run_master_only_tick();
  void run_slave_only_tick();

  double now() const { return static_cast<double>(tick_index_) * cfg_.tick; }
  const SessionSupervisor& supervisor() const { return supervisor_; }
  const JointState& slave_state() const { return slave_; }
  const MasterState& master_state() const { return master_; }
  const GripperState& gripper_state() const { return gripper_; }
  const TaskPose& slave_setpoint() const { return setpoint_pose_; }
  const std::vector<FaultEvent>& fault_log() const { return fault_log_; }
  const Vec3& base_pose() const { return base_pose_; }

  /// Net energy absorbed by the communication channel (port-power integral).
  /// Nonnegative for the wave coupling; goes negative when a delayed direct
  /// reflection generates energy.
  double channel_energy() const { return port_energy_; }
  double min_channel_energy() const { return min_port_energy_; }
  bool energy_divergent() const {
    return min_port_energy_ < -cfg_.divergence_threshold;
  }

  const EnergyLedger& ledger_to_slave() const { return ledger_to_slave_; }
  const EnergyLedger& ledger_to_master() const { return ledger_to_master_; }
  const WavePolicyStats& wave_stats() const { return wave_stats_; }

  /// Kinetic plus gravitational energy of both mechanical sides.
  double mechanical_energy() const;

  const SessionConfig& config() const { return cfg_; }

 private:
  void master_tick(double t);
  void slave_tick(double t);
  MetricsRecord make_record(double t);
  void handle_fault(const FaultEvent& event, double t);
  void send_control(std::uint8_t code, double kind, double joint, double t);

  SessionConfig cfg_;
  std::unique_ptr<PacketTransport> transport_;
  CouplingMap map_;

  // slave side
  JointState slave_;
  GripperState gripper_;
  TaskPose setpoint_pose_;
  TaskTwist setpoint_twist_;
  Vec3 grip_setpoint_ = Vec3::Zero();
  Vec3 grip_setpoint_vel_ = Vec3::Zero();
  Wrench last_contact_;
  Quat orientation_feedforward_ = Quat::Identity();
  VecX direct_velocity_latch_;

  // master side
  MasterState master_;
  Vec3 direct_force_latch_ = Vec3::Zero();
  Vec3 direct_grip_latch_ = Vec3::Zero();
  bool master_paused_ = false;
  Vec3 ee_telemetry_ = Vec3::Zero();

  // wave policy state
  std::uint32_t seq_to_slave_ = 0;
  std::uint32_t seq_to_master_ = 0;
  std::uint32_t ctrl_seq_ = 0;
  std::uint32_t last_seq_at_slave_ = 0;
  std::uint32_t last_seq_at_master_ = 0;
  bool slave_consumed_any_ = false;
  bool master_consumed_any_ = false;
  EnergyLedger ledger_to_slave_;
  EnergyLedger ledger_to_master_;
  WavePolicyStats wave_stats_;
  double port_energy_ = 0.0;
  double min_port_energy_ = 0.0;

  // supervisor
  SessionSupervisor supervisor_;
  ErrorMonitor monitor_;
  std::vector<FaultEvent> fault_log_;
  VecX recovery_from_;
  double recovery_t0_ = 0.0;
  VecX recovery_kp_;
  VecX recovery_kd_;

  // base
  Vec3 base_pose_ = Vec3::Zero();  // x, y, heading
  TaskTwist base_twist_;

  std::uint64_t tick_index_ = 0;
};

}  // namespace telesim
