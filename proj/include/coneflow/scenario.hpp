#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coneflow/cone.hpp"
#include "coneflow/diagnostics.hpp"
#include "coneflow/flow.hpp"

namespace coneflow {

inline constexpr const char* kEngineVersion = "0.3.1";

enum class StepperKind { semi_implicit, explicit_rk4 };

struct PerturbationMode {
  int j = 0;
  double amplitude = 0.0;
};

enum class ReferenceArc { automatic, none, stationary, fixed_length, self_similar };

/// Full description of one run.
struct ScenarioConfig {
  double theta1 = 0.0;
  double theta2 = 0.0;
  FlowSpec flow;
  double r0 = 1.0;
  std::vector<PerturbationMode> modes;
  std::uint64_t seed = 0;
  int random_modes = 0;  // extra modes 1..random_modes with seeded amplitudes
  double random_amplitude = 0.0;
  int N = 64;
  double t_end = 1.0;
  double output_every = 0.0;  // 0 selects t_end/100
  double dense_until = 0.0;   // frames every dense_every on (0, dense_until] first
  double dense_every = 0.0;
  StepperKind stepper = StepperKind::semi_implicit;
  StepperOptions options;
  double psw_tol = 1e-8;
  bool svg = false;
  ReferenceArc reference = ReferenceArc::automatic;

  Cone cone() const { return {theta1, theta2}; }
  double output_interval() const { return output_every > 0.0 ? output_every : t_end / 100.0; }
  // Frame times after t = 0, strictly increasing, ending at t_end.
  std::vector<double> output_times() const;
};

// Strict key=value parsing with '#' comments. Throws ConfigError listing every problem.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Apply "key=value" overrides on top of a parsed config (same validation).
ScenarioConfig with_overrides(const ScenarioConfig& base,
                              const std::vector<std::pair<std::string, std::string>>& kv);

// Canonical text form; parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const ScenarioConfig& config);

// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

// Polar graph ρ(θ) = r₀(1 + Σ a_j cos(jπ(θ-θ₂)/(θ₁-θ₂))), resampled to equal chords, with
// endpoints snapped onto the rays. Throws ConfigError if the result is not a regular
// curve clear of the tip.
DiscreteCurve gen_initial(const ScenarioConfig& config);

// Configured modes merged with the seeded random ones, sorted by j.
std::vector<PerturbationMode> all_modes(const ScenarioConfig& config);

enum class RunStatus { completed, tip_collision, stepper_failure, degenerate };

std::string to_string(RunStatus status);

struct RunResult {
  Series series;
  std::optional<FlowState> final_state;
  ThresholdReport thresholds;
  RunStatus status = RunStatus::completed;
  std::string message;
  long steps = 0;
  double wall_seconds = 0.0;
};

using FrameObserver = std::function<void(const FlowState&, const DiagnosticsFrame&, std::size_t)>;

// Integrates to t_end, recording a frame at t = 0 and every output interval. Runtime
// aborts end the run early with the partial series kept.
RunResult run(const ScenarioConfig& config, const FrameObserver& observer = {});

struct ThresholdCheck {
  ThresholdReport report;
  int mode_j = 2;
  double max_compliant_amplitude = 0.0;  // largest |a_j| with the hypotheses still met
};

// Evaluates the threshold report of the configured initial curve and bisects the amplitude
// of mode j (first configured mode, else 2) for the largest compliant value.
ThresholdCheck check_thresholds(const ScenarioConfig& config);

// Radius of the reference arc at time t (0 when none applies).
double reference_radius(const ScenarioConfig& config, double L0, double t);

}  // namespace coneflow
