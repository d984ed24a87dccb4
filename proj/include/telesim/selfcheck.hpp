#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace telesim {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfcheckOptions {
  // Override the frozen wire-format golden bytes (negative-control hook).
  const std::vector<std::uint8_t>* golden_override = nullptr;
  // Tolerance for the nullspace annihilation check.
  double annihilation_tolerance = 1e-8;
};

/// Runs the built-in oracle suites: two-link closed-form dynamics, wave
/// transform identities, wire-codec golden bytes and error cases, and
/// nullspace projector annihilation.
std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options = {});

}  // namespace telesim
