#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "telesim/control.hpp"
#include "telesim/dynamics.hpp"
#include "telesim/netsim.hpp"
#include "telesim/reference_models.hpp"
#include "telesim/scenario.hpp"
#include "telesim/selfcheck.hpp"
#include "telesim/session.hpp"
#include "telesim/wave.hpp"

namespace py = pybind11;
using namespace telesim;

namespace {

Eigen::Vector4d quat_to_wxyz(const Quat& q) {
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

Quat wxyz_to_quat(const Eigen::Vector4d& v) {
  Quat q(v[0], v[1], v[2], v[3]);
  return q.normalized();
}

}  // namespace

PYBIND11_MODULE(_telesim, m) {
  m.doc() = "Deterministic bilateral-teleoperation simulator";

  // ---- core types -------------------------------------------------------
  py::class_<JointState>(m, "JointState")
      .def(py::init<VecX, VecX>(), py::arg("q"), py::arg("qd"))
      .def_static("zero", &JointState::zero)
      .def_readwrite("q", &JointState::q)
      .def_readwrite("qd", &JointState::qd)
      .def_property_readonly("dof", &JointState::dof);

  py::class_<TaskPose>(m, "TaskPose")
      .def(py::init<>())
      .def_readwrite("position", &TaskPose::position)
      .def_property(
          "orientation_wxyz",
          [](const TaskPose& p) { return quat_to_wxyz(p.orientation); },
          [](TaskPose& p, const Eigen::Vector4d& v) { p.orientation = wxyz_to_quat(v); });

  py::class_<TaskTwist>(m, "TaskTwist")
      .def(py::init<>())
      .def_readwrite("linear", &TaskTwist::linear)
      .def_readwrite("angular", &TaskTwist::angular)
      .def("vector", &TaskTwist::vector);

  py::class_<Wrench>(m, "Wrench")
      .def(py::init<>())
      .def_readwrite("force", &Wrench::force)
      .def_readwrite("torque", &Wrench::torque)
      .def("vector", &Wrench::vector);

  // ---- arm models --------------------------------------------------------
  py::class_<ArmModel>(m, "ArmModel")
      .def_property_readonly("dof", &ArmModel::dof)
      .def_property_readonly("gravity", &ArmModel::gravity)
      .def_property_readonly("lower_limits", &ArmModel::lower_limits)
      .def_property_readonly("upper_limits", &ArmModel::upper_limits)
      .def_property_readonly("velocity_limits", &ArmModel::velocity_limits)
      .def_property_readonly("torque_limits", &ArmModel::torque_limits);

  m.def("load_arm_model", &load_arm_model, py::arg("path"));
  m.def("one_link_pendulum", &one_link_pendulum, py::arg("mass") = 1.0,
        py::arg("com_offset") = 0.5, py::arg("inertia_zz") = 1.0 / 12.0,
        py::arg("tip") = 1.0, py::arg("gravity") = 9.81);
  m.def("two_link_planar", &two_link_planar);
  m.def("three_link_planar", &three_link_planar);
  m.def("seven_dof_arm", &seven_dof_arm);

  // ---- dynamics ----------------------------------------------------------
  m.def("mass_matrix", &mass_matrix, py::arg("model"), py::arg("q"));
  m.def("bias_forces", &bias_forces, py::arg("model"), py::arg("state"));
  m.def("gravity_torques", &gravity_torques, py::arg("model"), py::arg("q"));
  m.def("jacobian", [](const ArmModel& model, const VecX& q) -> MatX {
    return jacobian(model, q);
  });
  m.def("forward_kinematics", &forward_kinematics, py::arg("model"), py::arg("q"));
  m.def("kinetic_energy", &kinetic_energy);
  m.def("potential_energy", &potential_energy);
  m.def("step", &step, py::arg("model"), py::arg("state"), py::arg("tau"),
        py::arg("f_ext"), py::arg("dt"));

  // ---- control -----------------------------------------------------------
  py::class_<GainSet>(m, "GainSet")
      .def_static("defaults", &GainSet::defaults, py::arg("model"), py::arg("q0"),
                  py::arg("wall_margin") = 0.15)
      .def_readwrite("stiffness", &GainSet::stiffness)
      .def_readwrite("damping", &GainSet::damping)
      .def_readwrite("null_stiffness", &GainSet::null_stiffness)
      .def_readwrite("null_damping", &GainSet::null_damping)
      .def_readwrite("wall_stiffness", &GainSet::wall_stiffness)
      .def_readwrite("wall_damping", &GainSet::wall_damping)
      .def_readwrite("wall_lower", &GainSet::wall_lower)
      .def_readwrite("wall_upper", &GainSet::wall_upper)
      .def_readwrite("posture", &GainSet::posture)
      .def_readwrite("task_rows", &GainSet::task_rows);

  py::class_<GripperState>(m, "GripperState")
      .def(py::init<>())
      .def_readwrite("q", &GripperState::q)
      .def_readwrite("qd", &GripperState::qd);

  py::class_<FootplateSample>(m, "FootplateSample")
      .def(py::init<>())
      .def_readwrite("roll", &FootplateSample::roll)
      .def_readwrite("pitch", &FootplateSample::pitch)
      .def_readwrite("yaw", &FootplateSample::yaw)
      .def_property(
          "pressures",
          [](const FootplateSample& s) -> Eigen::Matrix<double, 5, 1> {
            return s.pressures;
          },
          [](FootplateSample& s, const Eigen::Matrix<double, 5, 1>& p) {
            s.pressures = p;
          })
      .def_readwrite("pressure_threshold", &FootplateSample::pressure_threshold)
      .def_readwrite("deadband", &FootplateSample::deadband)
      .def_readwrite("max_tilt", &FootplateSample::max_tilt)
      .def_readwrite("max_twist", &FootplateSample::max_twist);

  m.def("cartesian_impedance_torque", &cartesian_impedance_torque, py::arg("model"),
        py::arg("state"), py::arg("x_d"), py::arg("xd_d"), py::arg("f_e"),
        py::arg("gains"));
  m.def("nullspace_torque",
        [](const ArmModel& model, const JointState& state, const GainSet& gains) {
          return nullspace_torque(model, state, gains);
        });
  m.def("virtual_wall_torque", &virtual_wall_torque);
  m.def("gripper_coupling_torques",
        [](const GripperState& master, const GripperState& slave, const Vec3& k,
           const Vec3& b) {
          const GripperCoupling c = gripper_coupling_torques(master, slave, k, b);
          return py::make_tuple(c.master, c.slave);
        });
  m.def("footplate_to_twist", &footplate_to_twist);
  m.def("compose_arm_torque",
        [](const ArmModel& model, const JointState& state, const TaskPose& x_d,
           const TaskTwist& xd_d, const Wrench& f_e, const GainSet& gains) {
          return compose_arm_torque(model, state, x_d, xd_d, f_e, gains);
        });

  // ---- wave channel ------------------------------------------------------
  py::enum_<WaveDirection>(m, "WaveDirection")
      .value("MASTER_TO_SLAVE", WaveDirection::MasterToSlave)
      .value("SLAVE_TO_MASTER", WaveDirection::SlaveToMaster);

  py::class_<WaveConfig>(m, "WaveConfig")
      .def_static("uniform", &WaveConfig::uniform, py::arg("dof"), py::arg("b"))
      .def_readwrite("impedance", &WaveConfig::impedance);

  py::class_<WaveSample>(m, "WaveSample")
      .def(py::init<>())
      .def_readwrite("values", &WaveSample::values)
      .def_readwrite("direction", &WaveSample::direction)
      .def_readwrite("seq", &WaveSample::seq)
      .def_readwrite("stamp", &WaveSample::stamp);

  m.def("wave_encode", &encode, py::arg("velocity"), py::arg("force"), py::arg("cfg"),
        py::arg("direction") = WaveDirection::MasterToSlave, py::arg("seq") = 0,
        py::arg("stamp") = 0.0);
  m.def("wave_decode", [](const WaveSample& incoming, const VecX& local_force,
                          const WaveConfig& cfg) {
    const WaveDecode d = decode(incoming, local_force, cfg);
    return py::make_tuple(d.velocity, d.outgoing);
  });
  m.def("wave_decode_force", [](const WaveSample& incoming, const VecX& local_velocity,
                                const WaveConfig& cfg) {
    const WaveForceDecode d = decode_force(incoming, local_velocity, cfg);
    return py::make_tuple(d.force, d.outgoing);
  });
  m.def("wave_missing_sample", &missing_sample, py::arg("cfg"), py::arg("direction"),
        py::arg("seq") = 0, py::arg("stamp") = 0.0);

  // ---- wire codec and channel --------------------------------------------
  py::register_exception<BadMagic>(m, "BadMagic");
  py::register_exception<BadVersion>(m, "BadVersion");
  py::register_exception<BadCrc>(m, "BadCrc");
  py::register_exception<Truncated>(m, "Truncated");

  py::class_<Packet>(m, "Packet")
      .def(py::init<>())
      .def_readwrite("channel_id", &Packet::channel_id)
      .def_readwrite("flags", &Packet::flags)
      .def_readwrite("seq", &Packet::seq)
      .def_readwrite("stamp_ns", &Packet::stamp_ns)
      .def_readwrite("payload", &Packet::payload)
      .def("__eq__", [](const Packet& a, const Packet& b) { return a == b; });

  m.def("encode_packet", [](const Packet& p) {
    const std::vector<std::uint8_t> bytes = encode_packet(p);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_packet", [](const py::bytes& data) {
    const std::string_view view = data;
    return decode_packet(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
  });

  py::class_<GammaParams>(m, "GammaParams")
      .def(py::init<>())
      .def_readwrite("shape", &GammaParams::shape)
      .def_readwrite("scale", &GammaParams::scale);

  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("mean_delay", &ChannelConfig::mean_delay)
      .def_readwrite("jitter", &ChannelConfig::jitter)
      .def_readwrite("drop_prob", &ChannelConfig::drop_prob)
      .def_readwrite("seed", &ChannelConfig::seed)
      .def_readwrite("tick", &ChannelConfig::tick);

  py::class_<SimulatedChannel>(m, "SimulatedChannel")
      .def(py::init<const ChannelConfig&>())
      .def("send", &SimulatedChannel::send, py::arg("packet"), py::arg("now"))
      .def("poll", &SimulatedChannel::poll, py::arg("now"))
      .def_property_readonly("in_flight", &SimulatedChannel::in_flight);

  // ---- session and scenarios ----------------------------------------------
  py::enum_<SessionPhase>(m, "SessionPhase")
      .value("OPERATIONAL", SessionPhase::Operational)
      .value("FAULT", SessionPhase::Fault)
      .value("RECOVERING", SessionPhase::Recovering);

  py::enum_<FaultKind>(m, "FaultKind")
      .value("POSITION_LIMIT", FaultKind::PositionLimit)
      .value("VELOCITY_LIMIT", FaultKind::VelocityLimit)
      .value("TORQUE_SATURATION", FaultKind::TorqueSaturationPersistent);

  py::class_<FaultEvent>(m, "FaultEvent")
      .def_readonly("kind", &FaultEvent::kind)
      .def_readonly("joint", &FaultEvent::joint)
      .def_readonly("t", &FaultEvent::t);

  py::class_<MetricsRecord>(m, "MetricsRecord")
      .def_readonly("t", &MetricsRecord::t)
      .def_readonly("tracking_error", &MetricsRecord::tracking_error)
      .def_readonly("felt_force", &MetricsRecord::felt_force)
      .def_readonly("channel_energy", &MetricsRecord::channel_energy)
      .def_readonly("mode", &MetricsRecord::mode)
      .def_property_readonly("fault", [](const MetricsRecord& r) {
        return r.fault.has_value() ? py::cast(*r.fault) : py::none().cast<py::object>();
      });

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("name", &ScenarioConfig::name)
      .def_readwrite("duration", &ScenarioConfig::duration)
      .def_readonly("seed", &ScenarioConfig::seed);

  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("name", &RunSummary::name)
      .def_readonly("exit_code", &RunSummary::exit_code)
      .def_readonly("mean_tracking_error", &RunSummary::mean_tracking_error)
      .def_readonly("max_tracking_error", &RunSummary::max_tracking_error)
      .def_readonly("final_tracking_error", &RunSummary::final_tracking_error)
      .def_readonly("channel_dissipated", &RunSummary::channel_dissipated)
      .def_readonly("min_channel_energy", &RunSummary::min_channel_energy)
      .def_readonly("energy_divergent", &RunSummary::energy_divergent)
      .def_readonly("faults", &RunSummary::faults)
      .def_readonly("metrics", &RunSummary::metrics);

  m.def("load_scenario",
        [](const std::string& path, std::optional<std::uint64_t> seed) {
          return load_scenario(path, seed);
        },
        py::arg("path"), py::arg("seed") = py::none());
  m.def("run_scenario",
        [](const ScenarioConfig& cfg) { return run_scenario(cfg); },
        py::arg("config"));
  m.def("metrics_to_csv", &metrics_to_csv);

  py::class_<Session>(m, "Session")
      .def(py::init([](const ScenarioConfig& cfg) {
        return std::make_unique<Session>(cfg.session);
      }))
      .def("run_tick", &Session::run_tick)
      .def("run", &Session::run, py::arg("duration"))
      .def_property_readonly("now", &Session::now)
      .def_property_readonly("phase",
                             [](const Session& s) { return s.supervisor().phase(); })
      .def_property_readonly("slave_state", &Session::slave_state)
      .def_property_readonly("channel_energy", &Session::channel_energy)
      .def_property_readonly("energy_divergent", &Session::energy_divergent)
      .def_property_readonly("mechanical_energy", &Session::mechanical_energy);

  // ---- selfcheck -----------------------------------------------------------
  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("passed", &CheckResult::passed)
      .def_readonly("detail", &CheckResult::detail);
  m.def("run_selfcheck", [] { return run_selfcheck(); });
}
