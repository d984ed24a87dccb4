#include "telesim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ini.hpp"

namespace telesim {

namespace {

using ini::ConfigError;

double get_double(const ini::File& f, const ini::Section& s, const std::string& key,
                  double fallback) {
  const ini::Entry* e = s.find(key);
  return e != nullptr ? ini::to_double(f, *e) : fallback;
}

std::array<bool, 6> parse_task_rows(const ini::File& f, const ini::Entry& e) {
  // Row letters: x y z for translation, a b c for rotation about x y z.
  std::array<bool, 6> rows = {false, false, false, false, false, false};
  const std::string letters = "xyzabc";
  for (char c : e.value) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    const std::size_t idx = letters.find(c);
    if (idx == std::string::npos) {
      throw ConfigError(f.path, e.line,
                        std::string("task rows must use letters from 'xyzabc', got '") +
                            c + "'");
    }
    rows[idx] = true;
  }
  if (std::none_of(rows.begin(), rows.end(), [](bool b) { return b; })) {
    throw ConfigError(f.path, e.line, "task rows must select at least one row");
  }
  return rows;
}

void apply_gains(const ini::File& f, const ini::Section* s, GainSet& gains,
                 const ArmModel& arm) {
  if (s == nullptr) return;
  const int n = arm.dof();
  if (const ini::Entry* e = s->find("k_pos")) {
    gains.stiffness.topLeftCorner<3, 3>() = ini::to_double(f, *e) * Mat3::Identity();
  }
  if (const ini::Entry* e = s->find("b_pos")) {
    gains.damping.topLeftCorner<3, 3>() = ini::to_double(f, *e) * Mat3::Identity();
  }
  if (const ini::Entry* e = s->find("k_rot")) {
    gains.stiffness.bottomRightCorner<3, 3>() = ini::to_double(f, *e) * Mat3::Identity();
  }
  if (const ini::Entry* e = s->find("b_rot")) {
    gains.damping.bottomRightCorner<3, 3>() = ini::to_double(f, *e) * Mat3::Identity();
  }
  if (const ini::Entry* e = s->find("k_null")) {
    gains.null_stiffness = ini::to_double(f, *e) * MatX::Identity(n, n);
  }
  if (const ini::Entry* e = s->find("b_null")) {
    gains.null_damping = ini::to_double(f, *e) * MatX::Identity(n, n);
  }
  if (const ini::Entry* e = s->find("k_wall")) {
    gains.wall_stiffness = VecX::Constant(n, ini::to_double(f, *e));
  }
  if (const ini::Entry* e = s->find("b_wall")) {
    gains.wall_damping = VecX::Constant(n, ini::to_double(f, *e));
  }
  if (const ini::Entry* e = s->find("wall_margin")) {
    const double margin = ini::to_double(f, *e);
    gains.wall_lower = arm.lower_limits().array() + margin;
    gains.wall_upper = arm.upper_limits().array() - margin;
  }
}

Quat rotation_from_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle == 0.0) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, rv / angle));
}

void parse_operator(const ini::File& f, const ini::Section* s, OperatorScript& script) {
  if (s == nullptr) return;
  for (const ini::Entry* e : s->find_all("waypoint")) {
    const std::vector<double> v = ini::to_doubles(f, *e);
    if (v.size() != 4 && v.size() != 7) {
      throw ConfigError(f.path, e->line,
                        "waypoint expects 't x y z' or 't x y z rx ry rz'");
    }
    PoseWaypoint wp;
    wp.t = v[0];
    wp.position = Vec3(v[1], v[2], v[3]);
    if (v.size() == 7) {
      wp.orientation = rotation_from_vector(Vec3(v[4], v[5], v[6]));
    }
    script.pose_waypoints.push_back(wp);
  }
  for (const ini::Entry* e : s->find_all("grip")) {
    const VecX v = ini::to_vector(f, *e, 4);
    script.grip_waypoints.push_back({v[0], Vec3(v[1], v[2], v[3])});
  }
  for (const ini::Entry* e : s->find_all("footplate")) {
    const VecX v = ini::to_vector(f, *e, 9);
    FootplateWaypoint wp;
    wp.t = v[0];
    wp.roll = v[1];
    wp.pitch = v[2];
    wp.yaw = v[3];
    wp.pressures << v[4], v[5], v[6], v[7], v[8];
    script.footplate_waypoints.push_back(wp);
  }
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path,
                             std::optional<std::uint64_t> seed_override) {
  const ini::File f = ini::parse_file(path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  const ini::Section* arm_section = f.find("arm");
  if (arm_section == nullptr) {
    throw ConfigError(path, 0, "missing [arm] section");
  }
  const ini::Entry* model_entry = arm_section->find("model");
  if (model_entry == nullptr) {
    throw ConfigError(path, arm_section->line, "[arm] is missing 'model'");
  }
  std::filesystem::path model_path(model_entry->value);
  if (model_path.is_relative()) {
    model_path = base / model_path;
  }
  if (!std::filesystem::exists(model_path)) {
    throw ConfigError(path, model_entry->line,
                      "arm model file not found: " + model_path.string());
  }
  ArmModel arm = load_arm_model(model_path.string());
  const int n = arm.dof();

  const ini::Entry* q0_entry = arm_section->find("q0");
  if (q0_entry == nullptr) {
    throw ConfigError(path, arm_section->line, "[arm] is missing 'q0'");
  }
  const VecX q0 = ini::to_vector(f, *q0_entry, n);

  ScenarioConfig out{std::filesystem::path(path).stem().string(),
                     SessionConfig(std::move(arm)),
                     10.0,
                     0,
                     ""};
  SessionConfig& sc = out.session;

  double wall_margin = 0.15;
  if (const ini::Section* g = f.find("gains")) {
    if (const ini::Entry* e = g->find("wall_margin")) {
      wall_margin = ini::to_double(f, *e);
    }
  }
  sc.gains = GainSet::defaults(sc.arm, q0, wall_margin);
  apply_gains(f, f.find("gains"), sc.gains, sc.arm);
  if (const ini::Entry* e = arm_section->find("task")) {
    sc.gains.task_rows = parse_task_rows(f, *e);
  }
  if (const ini::Entry* e = arm_section->find("start")) {
    sc.start_posture = ini::to_vector(f, *e, n);
  }

  if (const ini::Section* s = f.find("scenario")) {
    out.duration = get_double(f, *s, "duration", out.duration);
    sc.tick = get_double(f, *s, "tick", sc.tick);
    if (const ini::Entry* e = s->find("seed")) {
      const long seed = ini::to_long(f, *e);
      if (seed < 0) throw ConfigError(path, e->line, "seed must be >= 0");
      out.seed = static_cast<std::uint64_t>(seed);
    }
    if (const ini::Entry* e = s->find("output")) {
      out.output_path = e->value;
    }
    if (out.duration <= 0.0) {
      throw ConfigError(path, s->line, "duration must be > 0");
    }
    if (sc.tick <= 0.0) {
      throw ConfigError(path, s->line, "tick must be > 0");
    }
  }

  if (const ini::Section* s = f.find("channel")) {
    const double delay = get_double(f, *s, "mean_delay", 0.0);
    const double shape = get_double(f, *s, "jitter_shape", 1.0);
    const double scale = get_double(f, *s, "jitter_scale", 0.0);
    const double drop = get_double(f, *s, "drop", 0.0);
    sc.to_slave.mean_delay = sc.to_master.mean_delay = delay;
    sc.to_slave.jitter = sc.to_master.jitter = GammaParams{shape, scale};
    sc.to_slave.drop_prob = sc.to_master.drop_prob = drop;
    if (const ini::Entry* e = s->find("coupling")) {
      if (e->value == "wave") {
        sc.mode = CouplingMode::Wave;
      } else if (e->value == "direct") {
        sc.mode = CouplingMode::Direct;
      } else {
        throw ConfigError(path, e->line, "coupling must be 'wave' or 'direct'");
      }
    }
    if (const ini::Entry* e = s->find("wave_b")) {
      sc.wave.impedance.head<3>() = Vec3::Constant(ini::to_double(f, *e));
    }
    if (const ini::Entry* e = s->find("wave_b_grip")) {
      sc.wave.impedance.tail<3>() = Vec3::Constant(ini::to_double(f, *e));
    }
    sc.divergence_threshold =
        get_double(f, *s, "divergence_threshold", sc.divergence_threshold);
  }

  if (const ini::Section* s = f.find("master")) {
    sc.master.mass = get_double(f, *s, "mass", sc.master.mass);
    sc.master.damping = get_double(f, *s, "damping", sc.master.damping);
    sc.master.hand_stiffness =
        get_double(f, *s, "hand_stiffness", sc.master.hand_stiffness);
    sc.master.hand_damping = get_double(f, *s, "hand_damping", sc.master.hand_damping);
  }

  if (const ini::Section* s = f.find("footplate")) {
    sc.footplate.pressure_threshold =
        get_double(f, *s, "pressure_threshold", sc.footplate.pressure_threshold);
    sc.footplate.deadband = get_double(f, *s, "deadband", sc.footplate.deadband);
    sc.footplate.max_tilt = get_double(f, *s, "max_tilt", sc.footplate.max_tilt);
    if (const ini::Entry* e = s->find("max_linear")) {
      const VecX v = ini::to_vector(f, *e, 2);
      sc.footplate.max_twist.linear = Vec3(v[0], v[1], 0.0);
    }
    sc.footplate.max_twist.angular.z() =
        get_double(f, *s, "max_yaw", sc.footplate.max_twist.angular.z());
  }

  if (const ini::Section* s = f.find("environment")) {
    for (const ini::Entry* e : s->find_all("plane")) {
      const VecX v = ini::to_vector(f, *e, 6);
      PlaneObstacle plane;
      plane.normal = Vec3(v[0], v[1], v[2]);
      const double norm = plane.normal.norm();
      if (norm <= 0.0) {
        throw ConfigError(path, e->line, "plane normal must be nonzero");
      }
      plane.normal /= norm;
      plane.offset = v[3];
      plane.stiffness = v[4];
      plane.damping = v[5];
      if (plane.stiffness <= 0.0) {
        throw ConfigError(path, e->line, "plane stiffness must be > 0");
      }
      sc.environment.planes.push_back(plane);
    }
    sc.payload_mass = get_double(f, *s, "payload_mass", 0.0);
    sc.payload_time = get_double(f, *s, "payload_time", sc.payload_time);
  }

  if (const ini::Section* s = f.find("recovery")) {
    sc.recovery_duration = get_double(f, *s, "duration", sc.recovery_duration);
    sc.recovery_timeout = get_double(f, *s, "timeout", sc.recovery_timeout);
  }

  parse_operator(f, f.find("operator"), sc.script);
  try {
    sc.script.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(path, 0, err.what());
  }

  if (seed_override.has_value()) {
    out.seed = *seed_override;
  }
  sc.to_slave.seed = out.seed;
  sc.to_master.seed = out.seed + 1000;
  return out;
}

namespace {

RunSummary summarize(const std::string& name, const Session& sess,
                     std::vector<MetricsRecord> metrics) {
  RunSummary summary;
  summary.name = name;
  summary.duration = metrics.empty() ? 0.0 : metrics.back().t;
  double total = 0.0;
  for (const MetricsRecord& rec : metrics) {
    total += rec.tracking_error;
    summary.max_tracking_error = std::max(summary.max_tracking_error, rec.tracking_error);
  }
  summary.mean_tracking_error = metrics.empty() ? 0.0 : total / metrics.size();
  summary.final_tracking_error = metrics.empty() ? 0.0 : metrics.back().tracking_error;
  summary.channel_dissipated =
      sess.ledger_to_slave().dissipated() + sess.ledger_to_master().dissipated();
  summary.min_channel_energy = sess.min_channel_energy();
  summary.energy_divergent = sess.energy_divergent();
  summary.faults = sess.fault_log();
  summary.exit_code = sess.supervisor().unrecoverable() ? 2 : 0;
  summary.metrics = std::move(metrics);
  return summary;
}

}  // namespace

RunSummary run_scenario(const ScenarioConfig& cfg,
                        std::unique_ptr<PacketTransport> transport) {
  Session sess(cfg.session, std::move(transport));
  std::vector<MetricsRecord> metrics = sess.run(cfg.duration);
  return summarize(cfg.name, sess, std::move(metrics));
}

RunSummary run_scenario_udp_role(const ScenarioConfig& cfg, UdpRole role,
                                 const std::string& bind_host,
                                 std::uint16_t bind_port,
                                 const std::string& peer_host,
                                 std::uint16_t peer_port) {
  auto transport =
      std::make_unique<UdpPeerTransport>(bind_host, bind_port, peer_host, peer_port);
  Session sess(cfg.session, std::move(transport));

  const auto ticks =
      static_cast<std::uint64_t>(std::llround(cfg.duration / cfg.session.tick));
  const auto tick_ns = std::chrono::nanoseconds(
      static_cast<std::int64_t>(cfg.session.tick * 1e9));
  const auto start = std::chrono::steady_clock::now();

  std::vector<MetricsRecord> metrics;
  metrics.reserve(role == UdpRole::Master ? ticks : 0);
  for (std::uint64_t i = 0; i < ticks; ++i) {
    if (role == UdpRole::Master) {
      metrics.push_back(sess.run_master_only_tick());
    } else {
      sess.run_slave_only_tick();
    }
    std::this_thread::sleep_until(start + (i + 1) * tick_ns);
  }
  return summarize(cfg.name, sess, std::move(metrics));
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics) {
  std::string out = "t,err_pos,felt_fx,felt_fy,felt_fz,e_channel,mode,fault\n";
  char line[256];
  for (const MetricsRecord& rec : metrics) {
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s,%s\n", rec.t,
                  rec.tracking_error, rec.felt_force.x(), rec.felt_force.y(),
                  rec.felt_force.z(), rec.channel_energy, to_string(rec.mode),
                  rec.fault.has_value() ? to_string(*rec.fault) : "none");
    out += line;
  }
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open metrics output: " + path);
  }
  out << metrics_to_csv(metrics);
}

std::string format_fault_line(const FaultEvent& event) {
  char line[128];
  std::snprintf(line, sizeof(line), "fault t=%.3f kind=%s joint=%d", event.t,
                to_string(event.kind), event.joint);
  return line;
}

}  // namespace telesim
