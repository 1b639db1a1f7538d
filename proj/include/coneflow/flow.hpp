#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coneflow/cone.hpp"
#include "coneflow/curve.hpp"

namespace coneflow {

enum class FlowMode { penalised, constrained, free };

std::string to_string(FlowMode mode);
FlowMode parse_flow_mode(const std::string& text);

struct FlowSpec {
  FlowMode mode = FlowMode::free;
  double lambda = 0.0;  // used only in penalised mode, must then be > 0
};

// Throws InvalidInput when mode and λ are inconsistent.
void validate(const FlowSpec& spec);

struct StepperOptions {
  double sigma_explicit = 0.05;  // stability_dt = sigma_explicit · h_min⁴
  double sigma_implicit = 0.2;   // default dt = sigma_implicit · h_min²
  double dt = 0.0;               // fixed semi-implicit dt; 0 selects the default
  int resample_every = 10;
  int max_rejections = 20;
  int regrow_after = 10;         // accepted steps before dt is doubled back
  double on_ray_tol = 1e-6;      // relative to L
  double neumann_tol = 1e-6;     // or 1.1× the pre-step residual, if larger
  double energy_tol = 1e-6;      // relative; penalised steps and every explicit step
  double tip_fraction = 1e-3;    // abort when an endpoint is within this·L of the tip
};

struct FlowState {
  DiscreteCurve curve;
  Cone cone;
  FlowSpec spec;
  double time = 0.0;
  double last_lambda = 0.0;
  long step_count = 0;
  double dt_current = 0.0;
  double dt_default = 0.0;
  int accepted_streak = 0;
};

FlowState make_state(DiscreteCurve curve, const Cone& cone, const FlowSpec& spec,
                     const StepperOptions& options = {});

struct StepReport {
  bool accepted = false;
  double dt_used = 0.0;
  double energy_delta = 0.0;  // change of E_λ (penalised) or E₀
  double max_speed = 0.0;
  int rejections = 0;
  BoundaryResiduals residuals;
};

// (-∫k_s² + ½∫k⁴) / ∫k². Throws DegenerateCurvature when ∫k² < 1e-14.
double lambda_constrained(const DiscreteCurve& curve, const EndMirrors& mirrors);
double lambda_constrained(const DiscreteCurve& curve);

// λ, λ(t) or 0 depending on the mode.
double effective_lambda(const DiscreteCurve& curve, const EndMirrors& mirrors,
                        const FlowSpec& spec);

// V = k_ss + ½k³ - λ_eff·k; the flow moves nodes by V·ν.
ScalarField normal_speed(const DiscreteCurve& curve, const FlowSpec& spec,
                         const EndMirrors& mirrors);
ScalarField normal_speed(const DiscreteCurve& curve, const FlowSpec& spec);

/// Square banded system in LAPACK band storage (column-major, ldab = 2kl+ku+1).
struct BandedSystem {
  int n = 0;
  int kl = 0;
  int ku = 0;
  std::vector<double> ab;
  std::vector<double> rhs;

  BandedSystem(int n, int kl, int ku);
  int ldab() const { return 2 * kl + ku + 1; }
  double& at(int i, int j) { return ab[static_cast<std::size_t>(kl + ku + i - j + j * ldab())]; }
  double at(int i, int j) const {
    return ab[static_cast<std::size_t>(kl + ku + i - j + j * ldab())];
  }
  // Throws StepperFailure if the matrix is singular.
  std::vector<double> solve() const;
};

// (X - x)/dt = -Δ_h² X + b(x) on a frozen metric, unknowns interleaved (x0, y0, x1, ...).
// The two rows of each endpoint are replaced by the along-ray component of its equation
// and the on-ray constraint.
BandedSystem assemble_semi_implicit(const FlowState& state, double dt);

// -Δ_h² x + b(x), with endpoint values reduced to their along-ray components: the
// velocity the semi-implicit scheme approaches as dt → 0.
std::vector<Point2> semi_implicit_rhs(const FlowState& state);

// One semi-implicit step, halving dt on rejection.
std::pair<FlowState, StepReport> step(const FlowState& state, double dt,
                                      const StepperOptions& options = {});

// Classical RK4 on the nodes with ghosts rebuilt per stage. No rejection loop; any
// sign of instability throws StepperFailure.
std::pair<FlowState, StepReport> step_explicit(const FlowState& state, double dt,
                                               const StepperOptions& options = {});

double stability_dt(const FlowState& state, double sigma = 0.05);

// Energy monitored by the stepper: E₀ + λL in penalised mode, E₀ otherwise.
double monitored_energy(const DiscreteCurve& curve, const Cone& cone, const FlowSpec& spec);

}  // namespace coneflow
