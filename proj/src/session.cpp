#include "telesim/session.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace telesim {

namespace {

constexpr std::uint8_t kChanToSlave = 0;
constexpr std::uint8_t kChanToMaster = 1;
constexpr std::uint8_t kChanControl = 2;

constexpr double kCtrlFault = 1.0;
constexpr double kCtrlRecovered = 2.0;
constexpr double kCtrlUnrecoverable = 3.0;

constexpr std::size_t kToSlaveCount = 13;   // u(6), quat(4), base twist(3)
constexpr std::size_t kToMasterCount = 9;   // v or force(6), ee position(3)

double quintic_position(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double quintic_velocity(double s) { return s * s * (30.0 + s * (-60.0 + 30.0 * s)); }

}  // namespace

const char* to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::PositionLimit:
      return "position_limit";
    case FaultKind::VelocityLimit:
      return "velocity_limit";
    case FaultKind::TorqueSaturationPersistent:
      return "torque_saturation";
  }
  return "unknown";
}

const char* to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Operational:
      return "operational";
    case SessionPhase::Fault:
      return "fault";
    case SessionPhase::Recovering:
      return "recovering";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// SessionSupervisor
// ---------------------------------------------------------------------------

void SessionSupervisor::trigger_fault(FaultKind kind) {
  if (phase_ != SessionPhase::Operational) {
    throw std::logic_error("supervisor: fault can only be raised from Operational");
  }
  phase_ = SessionPhase::Fault;
  fault_ = kind;
  progress_ = 0.0;
}

void SessionSupervisor::begin_recovery() {
  if (phase_ != SessionPhase::Fault || unrecoverable_) {
    throw std::logic_error("supervisor: recovery can only start from a recoverable Fault");
  }
  phase_ = SessionPhase::Recovering;
  progress_ = 0.0;
}

void SessionSupervisor::set_progress(double p) {
  if (phase_ != SessionPhase::Recovering) {
    throw std::logic_error("supervisor: progress only applies while Recovering");
  }
  progress_ = std::clamp(p, 0.0, 1.0);
}

void SessionSupervisor::complete_recovery() {
  if (phase_ != SessionPhase::Recovering) {
    throw std::logic_error("supervisor: completion only applies while Recovering");
  }
  phase_ = SessionPhase::Operational;
  fault_.reset();
  progress_ = 0.0;
}

void SessionSupervisor::fail_recovery() {
  if (phase_ != SessionPhase::Recovering) {
    throw std::logic_error("supervisor: timeout only applies while Recovering");
  }
  phase_ = SessionPhase::Fault;
  unrecoverable_ = true;
}

// ---------------------------------------------------------------------------
// ErrorMonitor
// ---------------------------------------------------------------------------

std::optional<FaultEvent> ErrorMonitor::check(const ArmModel& model,
                                              const JointState& state, bool saturated,
                                              double t) {
  for (int i = 0; i < model.dof(); ++i) {
    if (state.q[i] < model.lower_limits()[i] || state.q[i] > model.upper_limits()[i]) {
      return FaultEvent{FaultKind::PositionLimit, i, t};
    }
  }
  for (int i = 0; i < model.dof(); ++i) {
    if (std::abs(state.qd[i]) > model.velocity_limits()[i]) {
      return FaultEvent{FaultKind::VelocityLimit, i, t};
    }
  }
  if (saturated) {
    if (saturated_since_ < 0.0) {
      saturated_since_ = t;
    } else if (t - saturated_since_ > window_) {
      return FaultEvent{FaultKind::TorqueSaturationPersistent, -1, t};
    }
  } else {
    saturated_since_ = -1.0;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

Wrench contact_wrench(const ContactEnvironment& env, const TaskPose& ee,
                      const TaskTwist& velocity) {
  Wrench out;
  for (const PlaneObstacle& plane : env.planes) {
    const double penetration = plane.offset - plane.normal.dot(ee.position);
    if (penetration <= 0.0) continue;
    const double approach = plane.normal.dot(velocity.linear);
    const double magnitude = plane.stiffness * penetration - plane.damping * approach;
    if (magnitude > 0.0) {
      out.force += magnitude * plane.normal;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------------

std::pair<TaskPose, TaskTwist> couple_setpoints(const TaskPose& master_pose,
                                                const TaskTwist& master_twist,
                                                const CouplingMap& map) {
  TaskPose x_d;
  x_d.position =
      map.slave_home + map.scale.cwiseProduct(master_pose.position - map.master_home);
  x_d.orientation = (master_pose.orientation * map.master_rot_home.conjugate()) *
                    map.slave_rot_home;
  TaskTwist xd_d;
  xd_d.linear = map.scale.cwiseProduct(master_twist.linear);
  xd_d.angular = master_twist.angular;
  return {x_d, xd_d};
}

Vec3 feedback_wrench(const Wrench& slave_contact) {
  return -slave_contact.force;
}

// ---------------------------------------------------------------------------
// OperatorScript
// ---------------------------------------------------------------------------

void OperatorScript::validate() const {
  const auto check_sorted = [](const auto& track, const char* what) {
    for (std::size_t i = 1; i < track.size(); ++i) {
      if (!(track[i].t > track[i - 1].t)) {
        throw std::invalid_argument(std::string("OperatorScript: ") + what +
                                    " waypoint times must be strictly increasing");
      }
    }
  };
  check_sorted(pose_waypoints, "pose");
  check_sorted(grip_waypoints, "grip");
  check_sorted(footplate_waypoints, "footplate");
}

void OperatorScript::sample_pose(double t, Vec3& position, Vec3& velocity,
                                 Quat& orientation) const {
  velocity.setZero();
  if (pose_waypoints.empty()) {
    position.setZero();
    orientation.setIdentity();
    return;
  }
  if (t <= pose_waypoints.front().t) {
    position = pose_waypoints.front().position;
    orientation = pose_waypoints.front().orientation;
    return;
  }
  if (t >= pose_waypoints.back().t) {
    position = pose_waypoints.back().position;
    orientation = pose_waypoints.back().orientation;
    return;
  }
  std::size_t hi = 1;
  while (pose_waypoints[hi].t < t) ++hi;
  const PoseWaypoint& a = pose_waypoints[hi - 1];
  const PoseWaypoint& b = pose_waypoints[hi];
  const double span = b.t - a.t;
  const double s = (t - a.t) / span;
  position = a.position + (b.position - a.position) * quintic_position(s);
  velocity = (b.position - a.position) * (quintic_velocity(s) / span);
  orientation = a.orientation.slerp(quintic_position(s), b.orientation);
}

void OperatorScript::sample_grip(double t, Vec3& q, Vec3& qd) const {
  qd.setZero();
  if (grip_waypoints.empty()) {
    q.setZero();
    return;
  }
  if (t <= grip_waypoints.front().t) {
    q = grip_waypoints.front().angles;
    return;
  }
  if (t >= grip_waypoints.back().t) {
    q = grip_waypoints.back().angles;
    return;
  }
  std::size_t hi = 1;
  while (grip_waypoints[hi].t < t) ++hi;
  const GripWaypoint& a = grip_waypoints[hi - 1];
  const GripWaypoint& b = grip_waypoints[hi];
  const double span = b.t - a.t;
  const double s = (t - a.t) / span;
  q = a.angles + (b.angles - a.angles) * quintic_position(s);
  qd = (b.angles - a.angles) * (quintic_velocity(s) / span);
}

FootplateWaypoint OperatorScript::sample_footplate(double t) const {
  FootplateWaypoint current;  // default: foot off the plate
  for (const FootplateWaypoint& wp : footplate_waypoints) {
    if (wp.t <= t) {
      current = wp;
    } else {
      break;
    }
  }
  current.t = t;
  return current;
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

UdpLoopbackTransport::UdpLoopbackTransport(const std::string& host,
                                           std::uint16_t master_port,
                                           std::uint16_t slave_port)
    : master_side_(host, master_port), slave_side_(host, slave_port) {
  master_side_.set_peer(host, slave_side_.port());
  slave_side_.set_peer(host, master_side_.port());
}

void UdpLoopbackTransport::to_slave(Packet p, double) { master_side_.send(p); }
std::vector<Packet> UdpLoopbackTransport::at_slave(double) { return slave_side_.poll(); }
void UdpLoopbackTransport::to_master(Packet p, double) { slave_side_.send(p); }
std::vector<Packet> UdpLoopbackTransport::at_master(double) {
  return master_side_.poll();
}

UdpPeerTransport::UdpPeerTransport(const std::string& bind_host,
                                   std::uint16_t bind_port,
                                   const std::string& peer_host,
                                   std::uint16_t peer_port)
    : endpoint_(bind_host, bind_port) {
  endpoint_.set_peer(peer_host, peer_port);
}

void UdpPeerTransport::to_slave(Packet p, double) { endpoint_.send(p); }
std::vector<Packet> UdpPeerTransport::at_slave(double) { return endpoint_.poll(); }
void UdpPeerTransport::to_master(Packet p, double) { endpoint_.send(p); }
std::vector<Packet> UdpPeerTransport::at_master(double) { return endpoint_.poll(); }

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

SessionConfig::SessionConfig(ArmModel arm_model)
    : arm(std::move(arm_model)), wave{VecX::Zero(6)} {
  wave.impedance << 50.0, 50.0, 50.0, 0.5, 0.5, 0.5;
}

Session::Session(SessionConfig cfg)
    : Session(std::move(cfg), nullptr) {}

Session::Session(SessionConfig cfg, std::unique_ptr<PacketTransport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      slave_(JointState::zero(cfg_.arm.dof())),
      monitor_(cfg_.saturation_window) {
  if (transport_ == nullptr) {
    transport_ = std::make_unique<SimulatedTransport>(cfg_.to_slave, cfg_.to_master);
  }
  cfg_.gains.validate(cfg_.arm);
  cfg_.wave.validate();
  if (cfg_.wave.dof() != 6) {
    throw std::invalid_argument("Session: wave config must have 6 lanes");
  }
  cfg_.to_slave.validate();
  cfg_.to_master.validate();
  cfg_.script.validate();
  if (cfg_.tick <= 0.0) {
    throw std::invalid_argument("Session: tick must be > 0");
  }

  if (cfg_.start_posture.size() == 0) {
    cfg_.start_posture = cfg_.gains.posture;
  }
  cfg_.arm.check_dimension(cfg_.start_posture, "Session start posture");
  slave_ = JointState(cfg_.start_posture, VecX::Zero(cfg_.arm.dof()));
  setpoint_pose_ = forward_kinematics(cfg_.arm, slave_.q);
  orientation_feedforward_ = setpoint_pose_.orientation;
  direct_velocity_latch_ = VecX::Zero(6);

  Vec3 script_vel;
  cfg_.script.sample_pose(0.0, master_.position, script_vel, master_.orientation);
  Vec3 grip_qd;
  cfg_.script.sample_grip(0.0, master_.glove.q, grip_qd);
  gripper_.q = master_.glove.q;
  grip_setpoint_ = gripper_.q;

  map_.scale = Vec3::Constant(cfg_.workspace_scale);
  map_.master_home = master_.position;
  map_.slave_home = setpoint_pose_.position;
  map_.master_rot_home = master_.orientation;
  map_.slave_rot_home = setpoint_pose_.orientation;

  // Impedance-mismatch invariant: the translation stage must stay at least a
  // factor ten lighter than the slave's task-space inertia.
  int rows = 0;
  for (int r = 0; r < 3; ++r) rows += cfg_.gains.task_rows[r] ? 1 : 0;
  if (rows > 0) {
    const Jacobian j = jacobian(cfg_.arm, slave_.q);
    MatX jt(rows, cfg_.arm.dof());
    int k = 0;
    for (int r = 0; r < 3; ++r) {
      if (cfg_.gains.task_rows[r]) jt.row(k++) = j.row(r);
    }
    const MatX m = mass_matrix(cfg_.arm, slave_.q);
    const MatX lambda_inv = jt * m.llt().solve(MatX(jt.transpose()));
    Eigen::SelfAdjointEigenSolver<MatX> es(lambda_inv);
    // Representative task-space inertia: mean of the apparent-mass eigenvalues.
    const double apparent_mass = es.eigenvalues().cwiseInverse().mean();
    if (cfg_.master.mass * 10.0 > apparent_mass) {
      throw std::invalid_argument(
          "Session: master translational inertia exceeds a tenth of the slave "
          "task-space inertia");
    }
  }

  if (cfg_.recovery_kp.size() == 0) {
    const MatX m = mass_matrix(cfg_.arm, cfg_.gains.posture);
    recovery_kp_.resize(cfg_.arm.dof());
    recovery_kd_.resize(cfg_.arm.dof());
    for (int i = 0; i < cfg_.arm.dof(); ++i) {
      recovery_kp_[i] = std::clamp(144.0 * m(i, i), 2.0, 0.8 * cfg_.arm.torque_limits()[i]);
      recovery_kd_[i] = std::clamp(29.0 * m(i, i), 0.5, 50.0);
    }
  } else {
    cfg_.arm.check_dimension(cfg_.recovery_kp, "Session recovery_kp");
    cfg_.arm.check_dimension(cfg_.recovery_kd, "Session recovery_kd");
    recovery_kp_ = cfg_.recovery_kp;
    recovery_kd_ = cfg_.recovery_kd;
  }
}

void Session::send_control(std::uint8_t code, double kind, double joint, double t) {
  Packet p;
  p.channel_id = kChanControl;
  p.flags = kFlagControlPlane;
  p.seq = ++ctrl_seq_;
  p.stamp_ns = static_cast<std::uint64_t>(std::llround(t * 1e9));
  p.payload = {static_cast<double>(code), kind, joint};
  transport_->to_master(std::move(p), t);
}

void Session::handle_fault(const FaultEvent& event, double t) {
  supervisor_.trigger_fault(event.kind);
  fault_log_.push_back(event);
  send_control(static_cast<std::uint8_t>(kCtrlFault),
               static_cast<double>(event.kind), event.joint, t);
}

void Session::master_tick(double t) {
  const double dt = cfg_.tick;

  Vec3 script_pos, script_vel;
  Quat script_rot;
  cfg_.script.sample_pose(t, script_pos, script_vel, script_rot);
  Vec3 grip_q, grip_qd;
  cfg_.script.sample_grip(t, grip_q, grip_qd);

  // Footplate -> base command, gated by the pressure deadman.
  const FootplateWaypoint fp = cfg_.script.sample_footplate(t);
  FootplateSample plate;
  plate.roll = fp.roll;
  plate.pitch = fp.pitch;
  plate.yaw = fp.yaw;
  plate.pressures = fp.pressures;
  plate.pressure_threshold = cfg_.footplate.pressure_threshold;
  plate.deadband = cfg_.footplate.deadband;
  plate.max_tilt = cfg_.footplate.max_tilt;
  plate.max_twist = cfg_.footplate.max_twist;
  const TaskTwist base_cmd = footplate_to_twist(plate);

  // Receive from the slave side.
  std::vector<Packet> packets = transport_->at_master(t);
  const Packet* best = nullptr;
  for (const Packet& p : packets) {
    if ((p.flags & kFlagControlPlane) != 0) {
      if (p.payload.empty()) continue;
      if (p.payload[0] == kCtrlFault || p.payload[0] == kCtrlUnrecoverable) {
        master_paused_ = true;
      } else if (p.payload[0] == kCtrlRecovered) {
        master_paused_ = false;
      }
      continue;
    }
    if (p.channel_id != kChanToMaster || p.payload.size() != kToMasterCount) continue;
    if (master_consumed_any_ && p.seq <= last_seq_at_master_) {
      ++wave_stats_.stale_discards;
      continue;
    }
    if (best == nullptr || p.seq > best->seq) best = &p;
  }

  Vec6 vel6;
  vel6 << master_.velocity, master_.glove.qd;

  if (!master_paused_) {
    VecX incoming = VecX::Zero(6);
    if (best != nullptr) {
      for (int i = 0; i < 6; ++i) incoming[i] = best->payload[i];
      ee_telemetry_ = Vec3(best->payload[6], best->payload[7], best->payload[8]);
      last_seq_at_master_ = best->seq;
      master_consumed_any_ = true;
    }

    Vec6 force_into_channel;
    VecX outbound(6);
    if (cfg_.mode == CouplingMode::Wave) {
      if (best != nullptr) {
        ledger_to_master_.e_out += 0.5 * incoming.squaredNorm() * dt;
      } else if (master_consumed_any_) {
        ++wave_stats_.zero_fills_at_master;
      }
      const VecX root = (2.0 * cfg_.wave.impedance).cwiseSqrt();
      force_into_channel =
          cfg_.wave.impedance.cwiseProduct(VecX(vel6)) - root.cwiseProduct(incoming);
      outbound = root.cwiseProduct(VecX(vel6)) - incoming;
      ledger_to_slave_.e_in += 0.5 * outbound.squaredNorm() * dt;
    } else {
      if (best != nullptr) {
        direct_force_latch_ = incoming.head<3>();
        direct_grip_latch_ = incoming.tail<3>();
      }
      force_into_channel << direct_force_latch_, direct_grip_latch_;
      outbound = vel6;  // raw velocities forward
    }

    master_.rendered_force = -force_into_channel.head<3>();
    master_.glove_rendered = -force_into_channel.tail<3>();
    port_energy_ += force_into_channel.dot(vel6) * dt;
    min_port_energy_ = std::min(min_port_energy_, port_energy_);

    Packet out;
    out.channel_id = kChanToSlave;
    out.seq = ++seq_to_slave_;
    out.stamp_ns = static_cast<std::uint64_t>(std::llround(t * 1e9));
    out.payload.resize(kToSlaveCount);
    for (int i = 0; i < 6; ++i) out.payload[i] = outbound[i];
    out.payload[6] = script_rot.w();
    out.payload[7] = script_rot.x();
    out.payload[8] = script_rot.y();
    out.payload[9] = script_rot.z();
    out.payload[10] = base_cmd.linear.x();
    out.payload[11] = base_cmd.linear.y();
    out.payload[12] = base_cmd.angular.z();
    transport_->to_slave(std::move(out), t);
  } else {
    master_.rendered_force.setZero();
    master_.glove_rendered.setZero();
  }

  // Integrate the translation stage and glove; substeps keep the explicit
  // wave damping term well inside the stability region.
  const int substeps = 10;
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    const Vec3 hand = cfg_.master.hand_stiffness * (script_pos - master_.position) +
                      cfg_.master.hand_damping * (script_vel - master_.velocity);
    const Vec3 accel = (hand + master_.rendered_force -
                        cfg_.master.damping * master_.velocity) /
                       cfg_.master.mass;
    master_.velocity += h * accel;
    master_.position += h * master_.velocity;

    const Vec3 grip_hand =
        cfg_.master.grip_hand_stiffness * (grip_q - master_.glove.q) +
        cfg_.master.grip_hand_damping * (grip_qd - master_.glove.qd);
    const Vec3 grip_accel = (grip_hand + master_.glove_rendered -
                             cfg_.master.grip_damping * master_.glove.qd) /
                            cfg_.master.grip_inertia;
    master_.glove.qd += h * grip_accel;
    master_.glove.q += h * master_.glove.qd;
  }
  master_.orientation = script_rot;
}

void Session::slave_tick(double t) {
  const double dt = cfg_.tick;
  const ArmModel& model = cfg_.arm;

  std::vector<Packet> packets = transport_->at_slave(t);
  const Packet* best = nullptr;
  for (const Packet& p : packets) {
    if ((p.flags & kFlagControlPlane) != 0) continue;
    if (p.channel_id != kChanToSlave || p.payload.size() != kToSlaveCount) continue;
    if (slave_consumed_any_ && p.seq <= last_seq_at_slave_) {
      ++wave_stats_.stale_discards;
      continue;
    }
    if (best == nullptr || p.seq > best->seq) best = &p;
  }

  if (supervisor_.phase() == SessionPhase::Fault && !supervisor_.unrecoverable()) {
    recovery_from_ = slave_.q;
    recovery_t0_ = t;
    supervisor_.begin_recovery();
  }

  if (supervisor_.phase() == SessionPhase::Operational) {
    VecX incoming = VecX::Zero(6);
    base_twist_ = TaskTwist::zero();
    if (best != nullptr) {
      for (int i = 0; i < 6; ++i) incoming[i] = best->payload[i];
      const Quat q_ff(best->payload[6], best->payload[7], best->payload[8],
                      best->payload[9]);
      if (q_ff.norm() > 0.5) {
        orientation_feedforward_ = (q_ff.normalized() *
                                    map_.master_rot_home.conjugate()) *
                                   map_.slave_rot_home;
      }
      base_twist_.linear.x() = best->payload[10];
      base_twist_.linear.y() = best->payload[11];
      base_twist_.angular.z() = best->payload[12];
      last_seq_at_slave_ = best->seq;
      slave_consumed_any_ = true;
    }

    // Wave-port termination: the translation lanes present the slave's task
    // force (coupling spring-damper plus the contact feedback), the gripper
    // lanes the coupling torque. A spring-damper-terminated port absorbs
    // incoming wave energy; a bare contact reflection would echo it back
    // losslessly. The damper part acts on the commanded velocity itself, so
    // the junction is solved implicitly per lane:
    //   cmd = (sqrt(2b) u - f_static + d*v_local) / (b + d)
    // with f_static the spring/contact part and d the lane damping. The wave
    // relations u = (b cmd + F_s)/sqrt(2b) then hold exactly.
    const TaskPose pose_before = forward_kinematics(model, slave_.q);
    const Vec6 xdot_before = jacobian(model, slave_.q) * slave_.qd;
    const Vec6 e_before = pose_error(setpoint_pose_, pose_before);
    const Vec6 spring_force = cfg_.gains.stiffness * e_before;

    VecX f_static(6), lane_damping(6), local_velocity(6);
    f_static << spring_force.head<3>() + feedback_wrench(last_contact_),
        cfg_.grip_stiffness.cwiseProduct(grip_setpoint_ - gripper_.q);
    lane_damping << cfg_.gains.damping.diagonal().head<3>(), cfg_.grip_damping;
    local_velocity << xdot_before.head<3>(), gripper_.qd;

    VecX command(6);
    VecX local_force(6);
    VecX back(6);
    if (cfg_.mode == CouplingMode::Wave) {
      if (best != nullptr) {
        ledger_to_slave_.e_out += 0.5 * incoming.squaredNorm() * dt;
      } else if (slave_consumed_any_) {
        ++wave_stats_.zero_fills_at_slave;
      }
      const VecX root = (2.0 * cfg_.wave.impedance).cwiseSqrt();
      command = (root.cwiseProduct(incoming) - f_static +
                 lane_damping.cwiseProduct(local_velocity))
                    .cwiseQuotient(cfg_.wave.impedance + lane_damping);
      local_force =
          f_static + lane_damping.cwiseProduct(command - local_velocity);
      back = incoming -
             (2.0 / cfg_.wave.impedance.array()).sqrt().matrix().cwiseProduct(
                 local_force);
      ledger_to_master_.e_in += 0.5 * back.squaredNorm() * dt;
      port_energy_ -= local_force.dot(command) * dt;
      min_port_energy_ = std::min(min_port_energy_, port_energy_);
    } else {
      if (best != nullptr) direct_velocity_latch_ = incoming;
      command = direct_velocity_latch_;
      local_force =
          f_static + lane_damping.cwiseProduct(command - local_velocity);
      back = local_force;  // raw force reflection
      port_energy_ -= local_force.dot(command) * dt;
      min_port_energy_ = std::min(min_port_energy_, port_energy_);
    }

    // Setpoint integration; the rotation setpoint is pure feedforward.
    setpoint_pose_.position += command.head<3>() * dt;
    setpoint_pose_.orientation = orientation_feedforward_;
    setpoint_twist_.linear = command.head<3>();
    setpoint_twist_.angular.setZero();
    grip_setpoint_ += command.tail<3>() * dt;
    grip_setpoint_vel_ = command.tail<3>();

    // Environment reaction at the current state.
    Wrench contact = contact_wrench(cfg_.environment, pose_before,
                                    TaskTwist::from_vector(xdot_before));
    if (t >= cfg_.payload_time) {
      contact.force += cfg_.payload_mass * model.gravity();
    }

    ControlDiagnostics diag;
    const VecX tau = compose_arm_torque(model, slave_, setpoint_pose_, setpoint_twist_,
                                        contact, cfg_.gains, &diag);

    slave_ = step(model, slave_, tau, contact, dt);
    last_contact_ = contact;

    // Gripper follows the transmitted glove motion.
    const GripperCoupling coupling = gripper_coupling_torques(
        GripperState{grip_setpoint_, grip_setpoint_vel_}, gripper_,
        cfg_.grip_stiffness, cfg_.grip_damping);
    const Vec3 grip_accel =
        (coupling.slave - cfg_.slave_grip_damping * gripper_.qd) /
        cfg_.slave_grip_inertia;
    gripper_.qd += dt * grip_accel;
    gripper_.q += dt * gripper_.qd;

    Packet out;
    out.channel_id = kChanToMaster;
    out.seq = ++seq_to_master_;
    out.stamp_ns = static_cast<std::uint64_t>(std::llround(t * 1e9));
    out.payload.resize(kToMasterCount);
    for (int i = 0; i < 6; ++i) out.payload[i] = back[i];
    const TaskPose pose_after = forward_kinematics(model, slave_.q);
    out.payload[6] = pose_after.position.x();
    out.payload[7] = pose_after.position.y();
    out.payload[8] = pose_after.position.z();
    transport_->to_master(std::move(out), t);

    if (const std::optional<FaultEvent> fault =
            monitor_.check(model, slave_, diag.saturated, t)) {
      handle_fault(*fault, t);
    }
  } else if (supervisor_.phase() == SessionPhase::Recovering) {
    base_twist_ = TaskTwist::zero();
    const double s =
        std::clamp((t - recovery_t0_) / cfg_.recovery_duration, 0.0, 1.0);
    supervisor_.set_progress(s);
    const VecX span = cfg_.gains.posture - recovery_from_;
    const VecX q_ref = recovery_from_ + span * quintic_position(s);
    const VecX qd_ref = span * (quintic_velocity(s) / cfg_.recovery_duration);

    const TaskPose pose = forward_kinematics(model, slave_.q);
    const Vec6 xdot = jacobian(model, slave_.q) * slave_.qd;
    Wrench contact = contact_wrench(cfg_.environment, pose,
                                    TaskTwist::from_vector(xdot));
    if (t >= cfg_.payload_time) {
      contact.force += cfg_.payload_mass * model.gravity();
    }

    VecX tau = recovery_kp_.cwiseProduct(q_ref - slave_.q) +
               recovery_kd_.cwiseProduct(qd_ref - slave_.qd) +
               gravity_torques(model, slave_.q) +
               virtual_wall_torque(slave_, cfg_.gains);
    for (int i = 0; i < model.dof(); ++i) {
      tau[i] = std::clamp(tau[i], -model.torque_limits()[i], model.torque_limits()[i]);
    }
    slave_ = step(model, slave_, tau, contact, dt);
    last_contact_ = contact;

    const bool settled =
        (slave_.q - cfg_.gains.posture).norm() < cfg_.recovery_pos_tol &&
        slave_.qd.norm() < cfg_.recovery_vel_tol;
    if (settled) {
      supervisor_.complete_recovery();
      monitor_.reset();
      setpoint_pose_ = forward_kinematics(model, slave_.q);
      setpoint_twist_ = TaskTwist::zero();
      orientation_feedforward_ = setpoint_pose_.orientation;
      grip_setpoint_ = gripper_.q;
      grip_setpoint_vel_.setZero();
      send_control(static_cast<std::uint8_t>(kCtrlRecovered), 0.0, -1.0, t);
    } else if (t - recovery_t0_ > cfg_.recovery_timeout) {
      supervisor_.fail_recovery();
      send_control(static_cast<std::uint8_t>(kCtrlUnrecoverable),
                   supervisor_.fault() ? static_cast<double>(*supervisor_.fault()) : -1.0,
                   -1.0, t);
    }
  } else {
    // Unrecoverable: hold against gravity with damped joints, walls active.
    base_twist_ = TaskTwist::zero();
    const TaskPose pose = forward_kinematics(model, slave_.q);
    const Vec6 xdot = jacobian(model, slave_.q) * slave_.qd;
    const Wrench contact = contact_wrench(cfg_.environment, pose,
                                          TaskTwist::from_vector(xdot));
    VecX tau = gravity_torques(model, slave_.q) - 2.0 * slave_.qd +
               virtual_wall_torque(slave_, cfg_.gains);
    for (int i = 0; i < model.dof(); ++i) {
      tau[i] = std::clamp(tau[i], -model.torque_limits()[i], model.torque_limits()[i]);
    }
    slave_ = step(model, slave_, tau, contact, dt);
    last_contact_ = contact;
  }

  // The base integrates the commanded twist kinematically in its own frame.
  const double heading = base_pose_.z();
  base_pose_.x() += (std::cos(heading) * base_twist_.linear.x() -
                     std::sin(heading) * base_twist_.linear.y()) *
                    dt;
  base_pose_.y() += (std::sin(heading) * base_twist_.linear.x() +
                     std::cos(heading) * base_twist_.linear.y()) *
                    dt;
  base_pose_.z() += base_twist_.angular.z() * dt;
}

MetricsRecord Session::make_record(double t) {
  MetricsRecord rec;
  rec.t = t;
  const Vec3 intent =
      map_.slave_home + map_.scale.cwiseProduct(master_.position - map_.master_home);
  rec.tracking_error =
      (intent - forward_kinematics(cfg_.arm, slave_.q).position).norm();
  rec.felt_force = master_.rendered_force;
  rec.channel_energy = port_energy_;
  rec.mode = supervisor_.phase();
  rec.fault = supervisor_.fault();
  rec.base_twist = base_twist_;
  return rec;
}

MetricsRecord Session::run_tick() {
  const double t = now();
  master_tick(t);
  slave_tick(t);
  MetricsRecord rec = make_record(t);
  ++tick_index_;
  return rec;
}

std::vector<MetricsRecord> Session::run(double duration) {
  const auto ticks = static_cast<std::uint64_t>(std::llround(duration / cfg_.tick));
  std::vector<MetricsRecord> records;
  records.reserve(ticks);
  for (std::uint64_t i = 0; i < ticks; ++i) {
    records.push_back(run_tick());
  }
  return records;
}

MetricsRecord Session::run_master_only_tick() {
  const double t = now();
  master_tick(t);
  MetricsRecord rec;
  rec.t = t;
  const Vec3 intent =
      map_.slave_home + map_.scale.cwiseProduct(master_.position - map_.master_home);
  rec.tracking_error = (intent - ee_telemetry_).norm();
  rec.felt_force = master_.rendered_force;
  rec.channel_energy = port_energy_;
  rec.mode = master_paused_ ? SessionPhase::Recovering : SessionPhase::Operational;
  rec.base_twist = base_twist_;
  ++tick_index_;
  return rec;
}

void Session::run_slave_only_tick() {
  const double t = now();
  slave_tick(t);
  ++tick_index_;
}

double Session::mechanical_energy() const {
  double energy = kinetic_energy(cfg_.arm, slave_) + potential_energy(cfg_.arm, slave_.q);
  energy += 0.5 * cfg_.master.mass * master_.velocity.squaredNorm();
  energy += 0.5 * cfg_.master.grip_inertia * master_.glove.qd.squaredNorm();
  energy += 0.5 * cfg_.slave_grip_inertia * gripper_.qd.squaredNorm();
  return energy;
}

}  // namespace telesim
