#include "coneflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "coneflow/error.hpp"
#include "json.hpp"

namespace coneflow {

namespace {

constexpr double kPi = std::numbers::pi;

Check make_check(std::string name, bool asserted, double value, double limit, bool passed,
                 std::string detail = {}) {
  return {std::move(name), asserted, passed, value, limit, std::move(detail)};
}

// Largest frame-to-frame increase, relative to 1 + |E|.
double worst_increase(const Series& s, double DiagnosticsFrame::*field) {
  double worst = 0.0;
  for (std::size_t i = 1; i < s.frames.size(); ++i) {
    const double prev = s.frames[i - 1].*field;
    worst = std::max(worst, (s.frames[i].*field - prev) / (1.0 + std::abs(prev)));
  }
  return worst;
}

void add_fit(RunReport& r, const std::string& name, const Series& s, const FrameSelector& field,
             FitMode mode, bool asserted, double min_quality, double floor) {
  if (!(field(s.frames.front()) > floor)) {
    r.checks.push_back(make_check(name, false, 0.0, 0.0, true, "already at the noise floor"));
    return;
  }
  try {
    FitWindow w;
    w.floor = floor;
    const auto fit = decay_fit(s, field, mode, w);
    const bool ok = fit.rate < 0.0 && fit.quality >= min_quality;
    r.checks.push_back(make_check(name, asserted, fit.rate, 0.0, ok,
                                  "quality " + std::to_string(fit.quality) + " over " +
                                      std::to_string(fit.samples) + " frames"));
  } catch (const InvalidInput& e) {
    r.checks.push_back(make_check(name, false, 0.0, 0.0, false, e.what()));
  }
}

}  // namespace

double noise_floor(const DiagnosticsFrame& initial, int segments, int ell) {
  return 1e-13 * initial.ks2_l[0] * std::pow(2.0 * segments / initial.L, 2.0 * ell);
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return !c.asserted || c.passed; });
}

RunReport evaluate_run(const ScenarioConfig& config, const Series& s, RunStatus status,
                       const ThresholdReport& th) {
  RunReport r;
  r.config_hash = s.config_hash;
  r.checks.push_back(make_check("status", true, 0.0, 0.0, status == RunStatus::completed,
                                to_string(status)));
  if (s.frames.empty()) {
    r.checks.push_back(make_check("frames", true, 0.0, 1.0, false, "empty series"));
    return r;
  }
  const double omega = config.cone().omega();
  const auto& first = s.frames.front();
  const auto& last = s.frames.back();
  const FlowMode mode = config.flow.mode;
  const bool compliant = th.hypotheses_met;

  double rot = 0.0, neumann = 0.0;
  bool psw_ok = true;
  for (const auto& f : s.frames) {
    rot = std::max(rot, std::abs(f.omega_num - omega));
    neumann = std::max(neumann, f.residuals.max_neumann());
    const auto p = psw_check(f, config.psw_tol);
    psw_ok = psw_ok && p.l2_ok && p.sup_ok;
  }
  r.checks.push_back(make_check("rotation_number", true, rot, 1e-6, rot <= 1e-6));
  r.checks.push_back(make_check("psw_inequalities", true, 0.0, 0.0, psw_ok));
  r.checks.push_back(make_check("neumann_residual", false, neumann, 0.0, true));

  if (mode == FlowMode::penalised) {
    const double inc = worst_increase(s, &DiagnosticsFrame::E_lambda);
    r.checks.push_back(make_check("energy_nonincreasing", true, inc, 1e-6, inc <= 1e-6));
    const auto lb = length_bounds(first.E_lambda, omega, config.flow.lambda);
    const double tol = 1e-3 * lb.upper;
    double excess = 0.0;
    for (const auto& f : s.frames)
      excess = std::max({excess, lb.lower - tol - f.L, f.L - lb.upper - tol});
    r.checks.push_back(make_check("length_bounds", true, excess, 0.0, excess <= 0.0));

    bool pointwise = true;
    for (const auto& f : s.frames)
      pointwise = pointwise &&
                  f.kmax_dev <= std::sqrt(2.0 * f.L / kPi) * std::sqrt(f.ks2) * (1.0 + 1e-8) + 1e-12;
    r.checks.push_back(make_check("curvature_pointwise", compliant, 0.0, 0.0, pointwise));
    add_fit(r, "ks2_decay", s, [](const DiagnosticsFrame& f) { return f.ks2; },
            FitMode::exponential, compliant, 0.95, noise_floor(first, config.N, 1));
    const double target = std::sqrt(2.0 * config.flow.lambda);
    double kdev = 0.0;
    for (double v : {last.kbar - last.kmax_dev, last.kbar + last.kmax_dev})
      kdev = std::max(kdev, std::abs(v - target));
    r.checks.push_back(make_check("curvature_limit", false, kdev, 1e-2, kdev <= 1e-2));
  } else if (mode == FlowMode::constrained) {
    const double inc = worst_increase(s, &DiagnosticsFrame::E0);
    r.checks.push_back(make_check("energy_nonincreasing", true, inc, 1e-6, inc <= 1e-6));
    double drift = 0.0;
    for (const auto& f : s.frames) drift = std::max(drift, std::abs(f.L - first.L) / first.L);
    r.checks.push_back(make_check("length_conserved", true, drift, 1e-4, drift <= 1e-4));
    double outside = 0.0;
    for (const auto& f : s.frames) {
      if (!std::isfinite(f.lambda_used)) continue;
      const auto b = lambda_bounds(first.L, f.ks2, f.kbar, omega);
      outside = std::max({outside, b.lower - 1e-8 - f.lambda_used, f.lambda_used - b.upper - 1e-8});
    }
    r.checks.push_back(make_check("lambda_bounds", compliant, outside, 0.0, outside <= 0.0));
    const double radius = last.kbar > 0.0 ? last.L / (2.0 * kPi * omega * (1.0 / last.kbar)) : 0.0;
    r.checks.push_back(make_check("radius_limit", false, std::abs(radius - 1.0), 1e-2,
                                  std::abs(radius - 1.0) <= 1e-2));
  } else {
    const double c = 32.0 * std::pow(omega, 4) * std::pow(kPi, 4);
    const double beta = first.epsilon;
    const double chat = c_hat(beta, omega);
    const double l40 = std::pow(first.L, 4);
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& f : s.frames) {
      const double norm = std::max(1.0, c * f.t);
      const double res = std::abs(std::pow(f.L, 4) - l40 - c * f.t) / norm;
      excess = std::max(excess, res - (beta * chat * f.t / norm + 5e-3));
    }
    r.checks.push_back(make_check("l4_growth", compliant, excess, 0.0, excess <= 0.0,
                                  "l4_residual " + std::to_string(l4_residual(s, omega))));
    double gamma_inc = 0.0;
    for (std::size_t i = 1; i < s.frames.size(); ++i) {
      const double a = s.frames[i - 1].gamma, b = s.frames[i].gamma;
      if (std::isfinite(a) && std::isfinite(b)) gamma_inc = std::max(gamma_inc, b - a);
    }
    r.checks.push_back(
        make_check("gamma_nonincreasing", compliant, gamma_inc, 1e-10, gamma_inc <= 1e-10));
    add_fit(r, "gamma_decay", s, [](const DiagnosticsFrame& f) { return f.gamma; }, FitMode::power,
            compliant, 0.0, noise_floor(first, config.N, 1) / std::pow(first.ks2_l[0], 3));
    // Chord-length L against exact k leaves (2πω)³/(24N²) even on a resolved arc.
    const double level = std::pow(2.0 * kPi * omega, 3) / (24.0 * config.N * config.N);
    const bool decreasing = last.rescaled_dev <= std::max(first.rescaled_dev, 2.0 * level);
    r.checks.push_back(make_check("rescaled_curvature_decreasing", compliant, last.rescaled_dev,
                                  first.rescaled_dev, decreasing));
    r.checks.push_back(make_check("rescaled_curvature_level", false, last.rescaled_dev, 1e-2,
                                  last.rescaled_dev <= 1e-2));
  }

  std::vector<double> floors{0.0};
  for (int l = 1; l <= 3; ++l) floors.push_back(noise_floor(first, config.N, l));
  const auto monitors = derivative_bound_monitor(s, 3, floors);
  for (const auto& m : monitors) {
    const bool assert_decrease = compliant && mode == FlowMode::penalised && m.ell <= 2;
    r.checks.push_back(make_check("derivative_bounded_l" + std::to_string(m.ell), compliant, 0.0,
                                  0.0, m.bounded));
    r.checks.push_back(make_check("derivative_decreasing_l" + std::to_string(m.ell),
                                  assert_decrease, 0.0, 0.0, m.decreasing));
  }
  return r;
}

std::string report_json(const RunReport& report) {
  nlohmann::json j;
  j["config_hash"] = report.config_hash;
  j["passed"] = report.passed();
  auto& arr = j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json e{{"name", c.name}, {"asserted", c.asserted}, {"passed", c.passed}};
    e["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    e["limit"] = std::isfinite(c.limit) ? nlohmann::json(c.limit) : nlohmann::json(nullptr);
    if (!c.detail.empty()) e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  return j.dump(2);
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto b = part.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("grid", "expected key=v1,v2 in '" + part + "'");
    GridAxis axis;
    axis.key = part.substr(b, eq - b);
    axis.key.erase(axis.key.find_last_not_of(" \t") + 1);
    std::stringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      const auto vb = v.find_first_not_of(" \t");
      if (vb == std::string::npos) continue;
      axis.values.push_back(v.substr(vb, v.find_last_not_of(" \t") - vb + 1));
    }
    if (axis.key.empty() || axis.values.empty())
      throw ConfigError("grid", "axis '" + part + "' needs a key and at least one value");
    for (const auto& other : axes)
      if (other.key == axis.key) throw ConfigError("grid", "duplicate axis " + axis.key);
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ConfigError("grid", "no axes given");
  return axes;
}

std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(
    const std::vector<GridAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& prefix : out)
      for (const auto& v : axis.values) {
        auto row = prefix;
        row.emplace_back(axis.key, v);
        next.push_back(std::move(row));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace coneflow
