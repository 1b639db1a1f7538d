#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coneflow/diagnostics.hpp"
#include "coneflow/scenario.hpp"

namespace coneflow {

struct Check {
  std::string name;
  bool asserted = true;  // informational checks never fail a report
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct RunReport {
  std::string config_hash;
  std::vector<Check> checks;

  // True when every asserted check passed.
  bool passed() const;
};

// Resolution floor of ∫k_{s^ℓ}² on an N-segment curve: 1e-13·∫k²·(2N/L)^{2ℓ}. Periodic
// resampling keeps converged runs near this level, so values below it are treated as zero
// by the decay fits and derivative monitors.
double noise_floor(const DiagnosticsFrame& initial, int segments, int ell);

// Checks that apply to the run's mode; mode-specific convergence checks are asserted only
// when the threshold hypotheses hold at t = 0.
RunReport evaluate_run(const ScenarioConfig& config, const Series& series, RunStatus status,
                       const ThresholdReport& thresholds);

std::string report_json(const RunReport& report);

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

// "k1=v1,v2;k2=w1" -> axes. Throws ConfigError on malformed input.
std::vector<GridAxis> parse_grid(const std::string& spec);

// Cartesian product in row-major order (last axis fastest).
std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(
    const std::vector<GridAxis>& axes);

}  // namespace coneflow
