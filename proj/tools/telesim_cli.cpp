// Command-line front end: scenario runs, regime comparisons, and the built-in
// oracle selftest.

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "telesim/scenario.hpp"
#include "telesim/selfcheck.hpp"

namespace {

struct HostPort {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

HostPort parse_host_port(const std::string& text, std::uint16_t fallback_port) {
  HostPort hp;
  hp.port = fallback_port;
  if (text.empty()) return hp;
  const std::size_t colon = text.rfind(':');
  if (colon == std::string::npos) {
    hp.host = text;
    return hp;
  }
  hp.host = text.substr(0, colon);
  hp.port = static_cast<std::uint16_t>(std::stoul(text.substr(colon + 1)));
  return hp;
}

void print_summary(const telesim::RunSummary& summary) {
  std::printf("%s: %zu ticks, mean err %.5f m, max err %.5f m, "
              "channel dissipated %.6f J, faults %zu%s%s\n",
              summary.name.c_str(), summary.metrics.size(),
              summary.mean_tracking_error, summary.max_tracking_error,
              summary.channel_dissipated, summary.faults.size(),
              summary.energy_divergent ? ", ENERGY-DIVERGENT" : "",
              summary.exit_code == 2 ? ", UNRECOVERABLE" : "");
}

int finish_run(const telesim::ScenarioConfig& cfg, const telesim::RunSummary& summary,
               const std::string& out_override, bool write_csv) {
  for (const telesim::FaultEvent& event : summary.faults) {
    std::fprintf(stderr, "%s\n", telesim::format_fault_line(event).c_str());
  }
  if (write_csv) {
    std::string path = out_override;
    if (path.empty()) path = cfg.output_path;
    if (path.empty()) path = cfg.name + ".csv";
    telesim::write_metrics_csv(path, summary.metrics);
    std::fprintf(stderr, "metrics written to %s\n", path.c_str());
  }
  print_summary(summary);
  return summary.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"telesim: deterministic bilateral-teleoperation simulator"};
  app.require_subcommand(1);

  std::string cfg_path, cfg_path_b;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool use_udp = false;
  std::string role;
  std::string bind_spec, peer_spec;

  CLI::App* run = app.add_subcommand("run", "run one scenario and write metrics CSV");
  run->add_option("config", cfg_path, "scenario .cfg file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_path, "metrics CSV path");
  run->add_flag("--udp", use_udp, "real-socket mode over UDP loopback");
  run->add_option("--role", role, "split-process side: master or slave")
      ->check(CLI::IsMember({"master", "slave"}));
  run->add_option("--bind", bind_spec, "bind host:port for --udp");
  run->add_option("--peer", peer_spec, "peer host:port for --udp");

  CLI::App* compare =
      app.add_subcommand("compare", "run two scenarios and print a comparison");
  compare->add_option("configA", cfg_path, "first scenario")->required();
  compare->add_option("configB", cfg_path_b, "second scenario")->required();
  compare->add_option("--seed", seed, "override both scenario seeds");

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the built-in oracle suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const telesim::ScenarioConfig cfg = telesim::load_scenario(cfg_path, seed);
      if (use_udp && !role.empty()) {
        // Default ports: 47474 carries master->slave, 47475 slave->master.
        const bool is_master = role == "master";
        const HostPort bind =
            parse_host_port(bind_spec, is_master ? 47475 : 47474);
        const HostPort peer = parse_host_port(peer_spec, is_master ? 47474 : 47475);
        const telesim::RunSummary summary = telesim::run_scenario_udp_role(
            cfg, is_master ? telesim::UdpRole::Master : telesim::UdpRole::Slave,
            bind.host, bind.port, peer.host, peer.port);
        return finish_run(cfg, summary, out_path, is_master);
      }
      std::unique_ptr<telesim::PacketTransport> transport;
      if (use_udp) {
        const HostPort master_side = parse_host_port(bind_spec, 47475);
        const HostPort slave_side = parse_host_port(peer_spec, 47474);
        transport = std::make_unique<telesim::UdpLoopbackTransport>(
            master_side.host, master_side.port, slave_side.port);
      }
      const telesim::RunSummary summary =
          telesim::run_scenario(cfg, std::move(transport));
      return finish_run(cfg, summary, out_path, true);
    }

    if (compare->parsed()) {
      const telesim::ScenarioConfig cfg_a = telesim::load_scenario(cfg_path, seed);
      const telesim::ScenarioConfig cfg_b = telesim::load_scenario(cfg_path_b, seed);
      const telesim::RunSummary a = telesim::run_scenario(cfg_a);
      const telesim::RunSummary b = telesim::run_scenario(cfg_b);
      for (const telesim::FaultEvent& event : a.faults) {
        std::fprintf(stderr, "[%s] %s\n", a.name.c_str(),
                     telesim::format_fault_line(event).c_str());
      }
      for (const telesim::FaultEvent& event : b.faults) {
        std::fprintf(stderr, "[%s] %s\n", b.name.c_str(),
                     telesim::format_fault_line(event).c_str());
      }
      std::printf("%-24s %16s %16s\n", "", a.name.c_str(), b.name.c_str());
      std::printf("%-24s %16.6f %16.6f\n", "mean tracking error [m]",
                  a.mean_tracking_error, b.mean_tracking_error);
      std::printf("%-24s %16.6f %16.6f\n", "max tracking error [m]",
                  a.max_tracking_error, b.max_tracking_error);
      std::printf("%-24s %16.6f %16.6f\n", "channel dissipated [J]",
                  a.channel_dissipated, b.channel_dissipated);
      std::printf("%-24s %16.6f %16.6f\n", "min channel energy [J]",
                  a.min_channel_energy, b.min_channel_energy);
      std::printf("%-24s %16s %16s\n", "energy divergent",
                  a.energy_divergent ? "yes" : "no", b.energy_divergent ? "yes" : "no");
      std::printf("%-24s %16zu %16zu\n", "faults", a.faults.size(), b.faults.size());
      std::printf("%-24s %16d %16d\n", "exit code", a.exit_code, b.exit_code);
      return std::max(a.exit_code, b.exit_code);
    }

    if (selftest->parsed()) {
      int failures = 0;
      for (const telesim::CheckResult& result : telesim::run_selfcheck()) {
        std::printf("[%s] %s: %s\n", result.passed ? "PASS" : "FAIL",
                    result.name.c_str(), result.detail.c_str());
        if (!result.passed) ++failures;
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  }
  return 0;
}
