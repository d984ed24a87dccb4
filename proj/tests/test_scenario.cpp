#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "telesim/reference_models.hpp"
#include "telesim/scenario.hpp"
#include "telesim/selfcheck.hpp"

using namespace telesim;

namespace {

const std::string kRoot = TELESIM_SOURCE_DIR;

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("bundled model files match the built-in reference chains") {
  const struct {
    const char* file;
    ArmModel reference;
  } cases[] = {
      {"models/one_link.arm", one_link_pendulum()},
      {"models/two_link.arm", two_link_planar()},
      {"models/three_link.arm", three_link_planar()},
      {"models/seven_dof.arm", seven_dof_arm()},
  };
  for (const auto& c : cases) {
    CAPTURE(c.file);
    const ArmModel loaded = load_arm_model(kRoot + "/" + c.file);
    REQUIRE(loaded.dof() == c.reference.dof());
    CHECK((loaded.gravity() - c.reference.gravity()).norm() <= 1e-12);
    for (int i = 0; i < loaded.dof(); ++i) {
      const LinkParams& a = loaded.link(i);
      const LinkParams& b = c.reference.link(i);
      CHECK(a.mass == doctest::Approx(b.mass).epsilon(1e-12));
      CHECK((a.com - b.com).norm() <= 1e-12);
      CHECK((a.inertia - b.inertia).norm() <= 1e-12);
      CHECK((a.axis - b.axis).norm() <= 1e-12);
      CHECK((a.transform.matrix() - b.transform.matrix()).norm() <= 1e-12);
      CHECK(a.limit_lower == b.limit_lower);
      CHECK(a.limit_upper == b.limit_upper);
    }
    CHECK((loaded.tool_transform().matrix() - c.reference.tool_transform().matrix())
              .norm() <= 1e-12);
  }
}

TEST_CASE("model loader reports file and line on malformed input") {
  SUBCASE("missing key") {
    const std::string path = write_temp("bad_model_1.arm",
                                        "[arm]\ngravity = 0 0 -9.81\n[link]\nmass = 1\n");
    CHECK_THROWS_WITH_AS(load_arm_model(path), doctest::Contains("missing 'com'"),
                         std::runtime_error);
  }
  SUBCASE("wrong arity") {
    const std::string path = write_temp(
        "bad_model_2.arm", "[arm]\ngravity = 0 0\n[link]\n");
    try {
      load_arm_model(path);
      FAIL("expected a config error");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("invalid physics rejected through model validation") {
    const std::string path = write_temp("bad_model_3.arm",
                                        "[arm]\n"
                                        "gravity = 0 0 -9.81\n"
                                        "[link]\n"
                                        "mass = -2\n"
                                        "com = 0 0 0\n"
                                        "inertia = 1 1 1\n"
                                        "axis = 0 0 1\n"
                                        "limit = -1 1\n"
                                        "velocity_limit = 1\n"
                                        "torque_limit = 1\n");
    CHECK_THROWS_AS(load_arm_model(path), std::runtime_error);
  }
}

TEST_CASE("scenario loader resolves the bundled configs") {
  const ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/freespace.cfg");
  CHECK(cfg.name == "freespace");
  CHECK(cfg.duration == 10.0);
  CHECK(cfg.session.tick == 1e-3);
  CHECK(cfg.session.arm.dof() == 3);
  CHECK(cfg.session.mode == CouplingMode::Wave);
  CHECK(cfg.session.gains.task_rows == std::array<bool, 6>{true, false, true, false,
                                                           false, false});
  CHECK(cfg.session.gains.stiffness(0, 0) == 500.0);
  CHECK(cfg.session.gains.stiffness(3, 3) == 1.0);
  CHECK(cfg.session.script.pose_waypoints.size() == 5);
  CHECK(cfg.session.script.footplate_waypoints.size() == 3);

  const ScenarioConfig pinned = load_scenario(kRoot + "/scenarios/pinned-arm.cfg");
  CHECK(pinned.session.environment.planes.size() == 1);
  CHECK(pinned.session.start_posture.size() == 3);

  const ScenarioConfig direct = load_scenario(kRoot + "/scenarios/direct-coupling.cfg");
  CHECK(direct.session.mode == CouplingMode::Direct);
  CHECK(direct.session.gains.stiffness(0, 0) == 1000.0);
}

TEST_CASE("seed override reseeds both channel directions") {
  const ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/wireless.cfg", 99);
  CHECK(cfg.seed == 99);
  CHECK(cfg.session.to_slave.seed == 99);
  CHECK(cfg.session.to_master.seed == 1099);
}

TEST_CASE("scenario parsing is total: parse or addressed error, never a crash") {
  SUBCASE("handcrafted malformed inputs") {
    const char* cases[] = {
        "",                                  // empty
        "[scenario]\nduration = -5\n",       // bad value
        "[scenario\nduration = 5\n",         // broken header
        "key = 1\n",                         // key outside section
        "[arm]\nmodel = missing.arm\nq0 = 0\n",
        "[scenario]\nduration = abc\n",
        "\xff\xfe\x00garbage[==",            // binary noise
    };
    for (const char* text : cases) {
      const std::string path = write_temp("fuzz_case.cfg", text);
      CHECK_THROWS_AS(load_scenario(path), std::runtime_error);
    }
  }
  SUBCASE("random byte strings") {
    std::mt19937 rng(321);
    std::uniform_int_distribution<int> len(0, 200);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 500; ++trial) {
      std::string text;
      const int n = len(rng);
      for (int i = 0; i < n; ++i) text.push_back(static_cast<char>(byte(rng)));
      const std::string path = write_temp("fuzz_rand.cfg", text);
      try {
        load_scenario(path);
      } catch (const std::exception&) {
        // structured failure is the expected outcome
      }
    }
    CHECK(true);
  }
}

TEST_CASE("metrics CSV has the pinned schema and constant field count") {
  ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/freespace.cfg");
  cfg.duration = 0.2;
  const RunSummary summary = run_scenario(cfg);
  REQUIRE(summary.exit_code == 0);
  REQUIRE(summary.metrics.size() == 200);

  const std::string csv = metrics_to_csv(summary.metrics);
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "t,err_pos,felt_fx,felt_fy,felt_fz,e_channel,mode,fault");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    ++rows;
  }
  CHECK(rows == 200);
}

TEST_CASE("zero-length run produces empty metrics") {
  ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/freespace.cfg");
  cfg.duration = 0.0004;  // rounds to zero ticks
  const RunSummary summary = run_scenario(cfg);
  CHECK(summary.metrics.empty());
  CHECK(metrics_to_csv(summary.metrics) ==
        "t,err_pos,felt_fx,felt_fy,felt_fz,e_channel,mode,fault\n");
}

TEST_CASE("same seed gives byte-identical CSV output") {
  const auto render = [&](std::uint64_t seed) {
    ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/wireless.cfg", seed);
    cfg.duration = 2.0;
    return metrics_to_csv(run_scenario(cfg).metrics);
  };
  CHECK(render(7) == render(7));
  CHECK(render(7) != render(8));
}

TEST_CASE("fault lines carry time, kind, and joint") {
  const FaultEvent event{FaultKind::VelocityLimit, 2, 1.234};
  CHECK(format_fault_line(event) == "fault t=1.234 kind=velocity_limit joint=2");
}

TEST_CASE("udp loopback transport runs a scenario end to end") {
  ScenarioConfig cfg = load_scenario(kRoot + "/scenarios/freespace.cfg");
  cfg.duration = 1.0;
  RunSummary wired_summary = run_scenario(cfg);
  RunSummary udp_summary;
  try {
    udp_summary = run_scenario(
        cfg, std::make_unique<UdpLoopbackTransport>("127.0.0.1", 0, 0));
  } catch (const std::runtime_error& err) {
    MESSAGE("udp loopback unavailable: ", err.what());
    return;
  }
  REQUIRE(udp_summary.metrics.size() == wired_summary.metrics.size());
  CHECK(udp_summary.exit_code == 0);
  CHECK(udp_summary.faults.empty());
  // Loopback delivery is immediate; tracking should be at least as tight as
  // the simulated 0.1 ms channel, up to scheduling slack.
  CHECK(udp_summary.max_tracking_error < 0.05);
}

TEST_CASE("selfcheck suites pass and react to perturbation") {
  SUBCASE("pristine build passes every suite") {
    for (const CheckResult& result : run_selfcheck()) {
      CAPTURE(result.name);
      CAPTURE(result.detail);
      CHECK(result.passed);
    }
  }
  SUBCASE("perturbed golden bytes fail the codec suite only") {
    std::vector<std::uint8_t> corrupted = {
        0x57, 0x41, 0x56, 0x45, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x93, 0x50, 0xb8, 0x0A};  // last byte off
    SelfcheckOptions options;
    options.golden_override = &corrupted;
    for (const CheckResult& result : run_selfcheck(options)) {
      if (result.name == "wire codec goldens") {
        CHECK_FALSE(result.passed);
      } else {
        CHECK(result.passed);
      }
    }
  }
  SUBCASE("annihilation holds with a tightened tolerance") {
    SelfcheckOptions options;
    options.annihilation_tolerance = 1e-10;  // two decades of headroom
    for (const CheckResult& result : run_selfcheck(options)) {
      if (result.name == "nullspace annihilation") {
        CHECK(result.passed);
      }
    }
  }
}
