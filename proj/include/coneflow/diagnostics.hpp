#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "coneflow/cone.hpp"
#include "coneflow/curve.hpp"
#include "coneflow/flow.hpp"

namespace coneflow {

/// One timestamped row of every monitored quantity.
struct DiagnosticsFrame {
  double t = 0.0;
  double L = 0.0;
  double A = 0.0;
  double E0 = 0.0;
  double E_lambda = 0.0;
  double ks2 = 0.0;                 // ∫k_s² ds
  std::array<double, 4> ks2_l{};    // ∫k_{s^ℓ}² ds for ℓ = 0..3
  double epsilon = 0.0;             // L³∫k_s²
  double gamma = 0.0;               // ∫k_s² / (∫k²)³, NaN when ∫k² vanishes
  double kbar = 0.0;
  double omega_num = 0.0;           // rotation number with ray mirrors at the ends
  double omega_free = 0.0;          // rotation number from the curve's own end geometry
  double lambda_used = 0.0;         // λ, λ(t) of this curve, or 0
  BoundaryResiduals residuals;
  double tip_dist = 0.0;
  double kmax_dev = 0.0;            // ‖k - k̄‖∞
  double rescaled_dev = 0.0;        // ‖L·k - 2πω‖∞
};

struct Series {
  std::vector<DiagnosticsFrame> frames;
  std::string config_hash;
  std::string engine_version;
};

DiagnosticsFrame make_frame(const DiscreteCurve& curve, const Cone& cone, const FlowSpec& spec,
                            double t);

struct Energies {
  double E0 = 0.0;
  double E_lambda = 0.0;
};

// E₀ = ½∫k²; E_λ = E₀ + λL in penalised mode and E₀ otherwise.
Energies energies(const DiscreteCurve& curve, const EndMirrors& mirrors, const FlowSpec& spec);
Energies energies(const DiscreteCurve& curve, const FlowSpec& spec);

double epsilon(const DiscreteCurve& curve, const EndMirrors& mirrors);
double epsilon(const DiscreteCurve& curve);

// Throws DegenerateCurvature when ∫k² < 1e-14.
double gamma(const DiscreteCurve& curve, const EndMirrors& mirrors);
double gamma(const DiscreteCurve& curve);

// ‖L·k - 2πω‖∞
double rescaled_curvature_deviation(const DiscreteCurve& curve, const EndMirrors& mirrors,
                                    double omega);
double rescaled_curvature_deviation(const DiscreteCurve& curve, double omega);

struct LengthBounds {
  double lower = 0.0;
  double upper = 0.0;
};

LengthBounds length_bounds(double E_lambda_0, double omega, double lambda);

// Bounds on the length-constraining multiplier in terms of ∫k_s².
struct LambdaBounds {
  double lower = 0.0;
  double upper = 0.0;
};

LambdaBounds lambda_bounds(double L0, double ks2, double kbar, double omega);

double omega_bound_penalised();    // 1/√28
double omega_bound_constrained();  // (15/6592)^¼

struct Threshold {
  double value = 0.0;
  bool hypothesis_ok = false;  // ω lies inside the range the bound needs
};

// Closed-form bound on ∫k_s² for the penalised flow.
Threshold smallness_penalised(double omega, double L_lower, double L_upper, double lambda);

// Square of the smallest positive root x of
//   1/8 - (28λL̄²/π² + 10)(L̄³/π³)x² - (10(2ω) + 22(2ω)³)√(2L̄³/π³)x,
// the quadratic the closed form is derived from. Reported for comparison only.
double smallness_penalised_quadratic(double omega, double L_upper, double lambda);

// δ = 15/8 - (103/2)(2ω)⁴.
double constrained_delta(double omega);

// Smallest positive root in ‖k_s‖₂ of the constrained-flow quartic; value 0 when δ ≤ 0.
Threshold smallness_constrained(double omega, double L0);

// ε_*(ω) = (π³/200)(√((176ω³+20ω)² + 5/4) - (176ω³+20ω))²
double epsilon_star(double omega);

double c_hat(double beta, double omega);
// Throws InvalidInput when eps > beta.
double delta_star(double eps, double beta, double omega);

struct FreeFlowConstants {
  double beta = 0.0;
  double c_hat = 0.0;       // Ĉ(β, ω)
  double delta_star = 0.0;  // δ_*(ε₁, β); NaN when ε₁ > β
  double c1 = 0.0;
  double c2 = 0.0;          // ε₁Ĉ(ε₁, ω) + 32ω⁴π⁴
  double c3 = std::numeric_limits<double>::quiet_NaN();  // filled from a fit
};

FreeFlowConstants free_flow_constants(double beta, double omega, double epsilon1);

struct HypothesisFlags {
  bool penalised = false;
  bool constrained = false;
  bool free = false;
};

struct ThresholdReport {
  FlowMode mode = FlowMode::free;
  double omega = 0.0;
  double omega_bound_penalised = 0.0;
  double omega_bound_constrained = 0.0;
  double L0 = 0.0;
  double E_lambda_0 = 0.0;
  double L_lower = 0.0;  // NaN outside penalised mode
  double L_upper = 0.0;
  double smallness_penalised = 0.0;            // bound on ∫k_s²
  double smallness_penalised_quadratic = 0.0;  // info
  double smallness_constrained = 0.0;          // bound on ‖k_s‖₂
  double epsilon_star = 0.0;
  double ks2_0 = 0.0;
  double epsilon_0 = 0.0;
  HypothesisFlags flags;
  bool hypotheses_met = false;  // flag of the active mode
};

ThresholdReport threshold_report(const DiscreteCurve& initial, const Cone& cone,
                                 const FlowSpec& spec);

// max |L⁴ - L⁴(0) - 32ω⁴π⁴t| / max(1, 32ω⁴π⁴t) over the frames.
double l4_residual(const Series& series, double omega);

enum class FitMode { exponential, power };

struct FitWindow {
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  double skip_fraction = 0.2;  // leading share of the windowed frames to drop
  double floor = 0.0;          // frames at or below this value are excluded
};

struct DecayFit {
  double rate = 0.0;     // slope of log(value) against t or log(1 + t/L⁴(0))
  double quality = 0.0;  // |Pearson r|
  std::size_t samples = 0;
};

using FrameSelector = std::function<double(const DiagnosticsFrame&)>;

// Needs at least 10 frames after windowing; throws InvalidInput otherwise or when a
// windowed value is not positive.
DecayFit decay_fit(const Series& series, const FrameSelector& field, FitMode mode,
                   const FitWindow& window = {});

struct DerivativeMonitor {
  int ell = 0;
  bool bounded = false;     // never above 10× the running median after the first 10%
  bool decreasing = false;  // final value ≤ value at the start of the final half
};

// Values at or below `floor` count as zero.
std::vector<DerivativeMonitor> derivative_bound_monitor(const Series& series, int lmax,
                                                        double floor = 1e-18);
// Per-order floors, floors[ℓ] for ℓ = 1..lmax.
std::vector<DerivativeMonitor> derivative_bound_monitor(const Series& series, int lmax,
                                                        const std::vector<double>& floors);

// PSW checks rebuilt from a frame's stored integrals.
PswCheck psw_check(const DiagnosticsFrame& frame, double tol = 1e-8);

}  // namespace coneflow
