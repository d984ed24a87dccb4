#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "telesim/session.hpp"

namespace telesim {

/// A fully resolved scenario: the session configuration plus run metadata.
/// Loaded from the INI-style .cfg format (see README for the schema);
/// malformed input raises an error carrying file and line.
struct ScenarioConfig {
  std::string name;
  SessionConfig session;
  double duration = 10.0;
  std::uint64_t seed = 0;
  std::string output_path;
};

/// Parses a scenario file. Paths inside the file resolve relative to the file
/// location. `seed_override` replaces the configured seed (and reseeds both
/// channel directions).
ScenarioConfig load_scenario(const std::string& path,
                             std::optional<std::uint64_t> seed_override = {});

struct RunSummary {
  std::string name;
  int exit_code = 0;  // 0 completed, 2 unrecoverable fault
  double duration = 0.0;
  double mean_tracking_error = 0.0;
  double max_tracking_error = 0.0;
  double final_tracking_error = 0.0;
  double channel_dissipated = 0.0;
  double min_channel_energy = 0.0;
  bool energy_divergent = false;
  std::vector<FaultEvent> faults;
  std::vector<MetricsRecord> metrics;
};

/// Runs a scenario to completion over the given transport (simulated channel
/// when none is supplied).
RunSummary run_scenario(const ScenarioConfig& cfg,
                        std::unique_ptr<PacketTransport> transport = nullptr);

enum class UdpRole { Master, Slave };

/// Split-process integration mode: runs one side of the loop over a real UDP
/// socket, paced against the wall clock.
RunSummary run_scenario_udp_role(const ScenarioConfig& cfg, UdpRole role,
                                 const std::string& bind_host,
                                 std::uint16_t bind_port,
                                 const std::string& peer_host,
                                 std::uint16_t peer_port);

/// Pinned metrics schema: t,err_pos,felt_fx,felt_fy,felt_fz,e_channel,mode,fault
std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics);
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& metrics);

/// One structured line per fault event: t, kind, joint index.
std::string format_fault_line(const FaultEvent& event);

}  // namespace telesim
