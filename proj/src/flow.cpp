#include "coneflow/flow.hpp"

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "coneflow/error.hpp"

namespace coneflow {

namespace {

struct Mat2 {
  double a, b, c, d;  // [[a, b], [c, d]]
};

constexpr Mat2 kIdentity{1.0, 0.0, 0.0, 1.0};

// R = 2mmᵀ - I, the reflection across the line spanned by m.
Mat2 reflection(Point2 m) {
  return {2.0 * m.x * m.x - 1.0, 2.0 * m.x * m.y, 2.0 * m.x * m.y, 2.0 * m.y * m.y - 1.0};
}

Mat2 complement(const Mat2& r) { return {1.0 - r.a, -r.b, -r.c, 1.0 - r.d}; }

double integral_of_power(std::span<const double> f, std::span<const double> w, int p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * std::pow(f[i], p);
  return sum;
}

double lambda_from(const CurveGeometry& g, std::span<const double> ks) {
  const double k2 = integral_of_power(g.k.values, g.weights, 2);
  if (k2 < 1e-14) throw DegenerateCurvature("integral of k^2 is below 1e-14");
  const double ks2 = integral_of_power(ks, g.weights, 2);
  const double k4 = integral_of_power(g.k.values, g.weights, 4);
  return (-ks2 + 0.5 * k4) / k2;
}

double lambda_for(const DiscreteCurve& curve, const CurveGeometry& g, const FlowSpec& spec) {
  switch (spec.mode) {
    case FlowMode::penalised: return spec.lambda;
    case FlowMode::free: return 0.0;
    case FlowMode::constrained: break;
  }
  const auto ks = curvature_derivative(g.k, curve, 1);
  return lambda_from(g, ks.values);
}

double min_segment(const DiscreteCurve& curve) {
  const auto h = segment_lengths(curve);
  return *std::min_element(h.begin(), h.end());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Velocity V·ν at every node for the RK4 stages; endpoints are assumed on their rays.
std::vector<Point2> flow_velocity(const std::vector<Point2>& nodes, const Cone& cone,
                                  const FlowSpec& spec) {
  const DiscreteCurve curve(nodes);
  const auto g = analyze(curve, cone_mirrors(cone));
  const double lam = lambda_for(curve, g, spec);
  const auto kss = curvature_derivative(g.k, curve, 2);
  std::vector<Point2> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double k = g.k[i];
    v[i] = (kss[i] + 0.5 * k * k * k - lam * k) * g.frame.normal[i];
  }
  return v;
}

DiscreteCurve project_endpoints(std::vector<Point2> nodes, const Cone& cone) {
  nodes.front() = project_to_ray(nodes.front(), cone, Side::minus);
  nodes.back() = project_to_ray(nodes.back(), cone, Side::plus);
  return DiscreteCurve(std::move(nodes));
}

void check_tip(const DiscreteCurve& curve, const StepperOptions& options) {
  if (tip_distance(curve) < options.tip_fraction * arc_length(curve))
    throw TipCollision("endpoint reached the cone tip region");
}

// The explicit part b = (3/2 k³ - λk)ν - 3k k_s τ.
std::vector<Point2> explicit_forcing(const DiscreteCurve& curve, const CurveGeometry& g,
                                     double lam) {
  const auto ks = curvature_derivative(g.k, curve, 1);
  std::vector<Point2> b(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double k = g.k[i];
    b[i] = (1.5 * k * k * k - lam * k) * g.frame.normal[i] - 3.0 * k * ks[i] * g.frame.tangent[i];
  }
  return b;
}

// Coefficients of Δ_h² at every node over extended nodes i-2..i+2 (extended index i+2).
std::vector<std::array<double, 5>> bilaplacian_stencils(const std::vector<Point2>& ext) {
  const std::size_t m = ext.size();
  std::vector<double> H(m - 1);
  for (std::size_t e = 0; e + 1 < m; ++e) H[e] = norm(ext[e + 1] - ext[e]);
  // Δ_h at extended node e, e = 1..m-2, as (left, centre, right).
  std::vector<std::array<double, 3>> lap(m);
  for (std::size_t e = 1; e + 1 < m; ++e) {
    const double hl = H[e - 1], hr = H[e];
    const double al = 2.0 / ((hl + hr) * hl), ar = 2.0 / ((hl + hr) * hr);
    lap[e] = {al, -(al + ar), ar};
  }
  const std::size_t n = m - 5;
  std::vector<std::array<double, 5>> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const std::size_t e = i + 2;
    std::array<double, 5> c{};
    for (int p = -1; p <= 1; ++p) {
      const double outer = lap[e][p + 1];
      const auto& inner = lap[e + p];
      for (int q = -1; q <= 1; ++q) c[static_cast<std::size_t>(p + q + 2)] += outer * inner[q + 1];
    }
    out[i] = c;
  }
  return out;
}

}  // namespace

std::string to_string(FlowMode mode) {
  switch (mode) {
    case FlowMode::penalised: return "penalised";
    case FlowMode::constrained: return "constrained";
    case FlowMode::free: return "free";
  }
  return "free";
}

FlowMode parse_flow_mode(const std::string& text) {
  if (text == "penalised") return FlowMode::penalised;
  if (text == "constrained") return FlowMode::constrained;
  if (text == "free") return FlowMode::free;
  throw InvalidInput("unknown flow mode '" + text + "'");
}

void validate(const FlowSpec& spec) {
  if (!std::isfinite(spec.lambda)) throw InvalidInput("lambda must be finite");
  if (spec.mode == FlowMode::penalised && !(spec.lambda > 0.0))
    throw InvalidInput("penalised flow requires lambda > 0");
}

FlowState make_state(DiscreteCurve curve, const Cone& cone, const FlowSpec& spec,
                     const StepperOptions& options) {
  validate(spec);
  const double h = min_segment(curve);
  const double dt = options.dt > 0.0 ? options.dt : options.sigma_implicit * h * h;
  FlowState s{std::move(curve), cone, spec};
  s.dt_current = dt;
  s.dt_default = dt;
  s.last_lambda = effective_lambda(s.curve, cone_mirrors(cone), spec);
  return s;
}

double lambda_constrained(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  return lambda_for(curve, analyze(curve, mirrors), {FlowMode::constrained, 0.0});
}

double lambda_constrained(const DiscreteCurve& curve) {
  return lambda_constrained(curve, free_end_mirrors(curve));
}

double effective_lambda(const DiscreteCurve& curve, const EndMirrors& mirrors,
                        const FlowSpec& spec) {
  if (spec.mode != FlowMode::constrained) return spec.mode == FlowMode::penalised ? spec.lambda : 0.0;
  return lambda_constrained(curve, mirrors);
}

ScalarField normal_speed(const DiscreteCurve& curve, const FlowSpec& spec,
                         const EndMirrors& mirrors) {
  const auto g = analyze(curve, mirrors);
  const double lam = lambda_for(curve, g, spec);
  const auto kss = curvature_derivative(g.k, curve, 2);
  ScalarField v{std::vector<double>(curve.size()), -1};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double k = g.k[i];
    v.values[i] = kss[i] + 0.5 * k * k * k - lam * k;
  }
  return v;
}

ScalarField normal_speed(const DiscreteCurve& curve, const FlowSpec& spec) {
  return normal_speed(curve, spec, free_end_mirrors(curve));
}

BandedSystem::BandedSystem(int n_, int kl_, int ku_)
    : n(n_), kl(kl_), ku(ku_),
      ab(static_cast<std::size_t>((2 * kl_ + ku_ + 1) * n_), 0.0),
      rhs(static_cast<std::size_t>(n_), 0.0) {}

std::vector<double> BandedSystem::solve() const {
  std::vector<double> a = ab;
  std::vector<double> x = rhs;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dgbsv(LAPACK_COL_MAJOR, n, kl, ku, 1, a.data(), ldab(), ipiv.data(), x.data(), n);
  if (info != 0) throw StepperFailure("banded solve failed (info " + std::to_string(info) + ")");
  return x;
}

BandedSystem assemble_semi_implicit(const FlowState& state, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const auto& curve = state.curve;
  const auto mirrors = cone_mirrors(state.cone);
  const auto ext = apply_boundary_ghosts(curve, state.cone);
  const auto g = analyze(curve, mirrors);
  const double lam = lambda_for(curve, g, state.spec);
  const auto b = explicit_forcing(curve, g, lam);
  const auto stencils = bilaplacian_stencils(ext);

  const int n = curve.segments();
  BandedSystem sys(2 * (n + 1), 5, 5);
  const Mat2 r_minus = reflection(mirrors.minus), r_plus = reflection(mirrors.plus);

  auto add_block = [&](int i, int j, double c, const Mat2& m) {
    sys.at(2 * i, 2 * j) += c * m.a;
    sys.at(2 * i, 2 * j + 1) += c * m.b;
    sys.at(2 * i + 1, 2 * j) += c * m.c;
    sys.at(2 * i + 1, 2 * j + 1) += c * m.d;
  };

  for (int i = 0; i <= n; ++i) {
    add_block(i, i, 1.0 / dt, kIdentity);
    for (int q = -2; q <= 2; ++q) {
      const double c = stencils[static_cast<std::size_t>(i)][static_cast<std::size_t>(q + 2)];
      const int node = i + q;
      if (node < 0) {
        add_block(i, 0, c, complement(r_minus));
        add_block(i, -node, c, r_minus);
      } else if (node > n) {
        add_block(i, n, c, complement(r_plus));
        add_block(i, 2 * n - node, c, r_plus);
      } else {
        add_block(i, node, c, kIdentity);
      }
    }
    const Point2 r = curve[static_cast<std::size_t>(i)] / dt + b[static_cast<std::size_t>(i)];
    sys.rhs[static_cast<std::size_t>(2 * i)] = r.x;
    sys.rhs[static_cast<std::size_t>(2 * i + 1)] = r.y;
  }

  // Endpoint rows: keep the along-ray equation, pin the normal component to the ray.
  auto constrain = [&](int node, Side side) {
    const Point2 e = ray_unit(state.cone, side);
    const Point2 nrm = perp(e);
    const int r0 = 2 * node, r1 = 2 * node + 1;
    const int lo = std::max(0, r0 - sys.kl), hi = std::min(sys.n - 1, r1 + sys.ku);
    for (int j = lo; j <= hi; ++j) {
      const double v0 = (j - r0 <= sys.ku && r0 - j <= sys.kl) ? sys.at(r0, j) : 0.0;
      const double v1 = (j - r1 <= sys.ku && r1 - j <= sys.kl) ? sys.at(r1, j) : 0.0;
      const double combined = e.x * v0 + e.y * v1;
      if (j - r0 <= sys.ku && r0 - j <= sys.kl) sys.at(r0, j) = combined;
      else if (combined != 0.0) throw StepperFailure("endpoint row leaves the band");
      if (j - r1 <= sys.ku && r1 - j <= sys.kl) sys.at(r1, j) = 0.0;
    }
    auto rhs = [&](int r) -> double& { return sys.rhs[static_cast<std::size_t>(r)]; };
    rhs(r0) = e.x * rhs(r0) + e.y * rhs(r1);
    // Scaled like the 1/dt rows so elimination does not lose the constraint to round-off.
    sys.at(r1, 2 * node) = nrm.x / dt;
    sys.at(r1, 2 * node + 1) = nrm.y / dt;
    rhs(r1) = 0.0;
  };
  constrain(0, Side::minus);
  constrain(n, Side::plus);
  return sys;
}

std::vector<Point2> semi_implicit_rhs(const FlowState& state) {
  const auto& curve = state.curve;
  const auto mirrors = cone_mirrors(state.cone);
  const auto ext = apply_boundary_ghosts(curve, state.cone);
  const auto g = analyze(curve, mirrors);
  const auto b = explicit_forcing(curve, g, lambda_for(curve, g, state.spec));
  const auto stencils = bilaplacian_stencils(ext);
  std::vector<Point2> f(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    Point2 bil;
    for (std::size_t q = 0; q < 5; ++q) bil += stencils[i][q] * ext[i + q];
    f[i] = b[i] - bil;
  }
  const Point2 em = ray_unit(state.cone, Side::minus), ep = ray_unit(state.cone, Side::plus);
  f.front() = dot(f.front(), em) * em;
  f.back() = dot(f.back(), ep) * ep;
  return f;
}

double monitored_energy(const DiscreteCurve& curve, const Cone& cone, const FlowSpec& spec) {
  const auto g = analyze(curve, cone_mirrors(cone));
  const double e0 = 0.5 * integral_of_power(g.k.values, g.weights, 2);
  return spec.mode == FlowMode::penalised ? e0 + spec.lambda * g.length : e0;
}

std::pair<FlowState, StepReport> step(const FlowState& state, double dt,
                                      const StepperOptions& options) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const double e_before = monitored_energy(state.curve, state.cone, state.spec);
  const double length = arc_length(state.curve);
  const double lam = effective_lambda(state.curve, cone_mirrors(state.cone), state.spec);
  // A curve that enters with a larger residual may keep it, but not grow it.
  const double neumann_limit =
      std::max(options.neumann_tol, 1.1 * boundary_residuals(state.curve, state.cone).max_neumann());
  StepReport report;

  for (int attempt = 0; attempt <= options.max_rejections; ++attempt, dt *= 0.5) {
    std::vector<double> x;
    try {
      x = assemble_semi_implicit(state, dt).solve();
    } catch (const StepperFailure&) {
      ++report.rejections;
      continue;
    }
    if (!all_finite(x)) {
      ++report.rejections;
      continue;
    }
    std::vector<Point2> nodes(state.curve.size());
    double max_move = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i] = {x[2 * i], x[2 * i + 1]};
      max_move = std::max(max_move, norm(nodes[i] - state.curve[i]));
    }
    const double drift = std::max(distance_to_ray(nodes.front(), state.cone, Side::minus),
                                  distance_to_ray(nodes.back(), state.cone, Side::plus));
    if (drift > options.on_ray_tol * length) {
      ++report.rejections;
      continue;
    }

    std::optional<DiscreteCurve> next;
    try {
      next = project_endpoints(std::move(nodes), state.cone);
    } catch (const InvalidInput&) {
      ++report.rejections;
      continue;
    }
    const long count = state.step_count + 1;
    if (options.resample_every > 0 && count % options.resample_every == 0)
      next = resample_uniform(*next, next->segments());
    check_tip(*next, options);

    const auto residuals = boundary_residuals(*next, state.cone);
    if (residuals.max_neumann() > neumann_limit) {
      ++report.rejections;
      continue;
    }
    const double e_after = monitored_energy(*next, state.cone, state.spec);
    if (state.spec.mode == FlowMode::penalised &&
        e_after - e_before > options.energy_tol * (1.0 + std::abs(e_before))) {
      ++report.rejections;
      continue;
    }

    FlowState out = state;
    out.curve = std::move(*next);
    out.time = state.time + dt;
    out.step_count = count;
    out.last_lambda = lam;
    if (report.rejections > 0) {
      out.dt_current = dt;
      out.accepted_streak = 0;
    } else if (++out.accepted_streak >= options.regrow_after) {
      out.dt_current = std::min(2.0 * out.dt_current, out.dt_default);
      out.accepted_streak = 0;
    }
    report.accepted = true;
    report.dt_used = dt;
    report.energy_delta = e_after - e_before;
    report.max_speed = max_move / dt;
    report.residuals = residuals;
    return {std::move(out), report};
  }
  throw StepperFailure("step rejected " + std::to_string(options.max_rejections + 1) +
                       " times");
}

std::pair<FlowState, StepReport> step_explicit(const FlowState& state, double dt,
                                               const StepperOptions& options) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const auto& x0 = state.curve.nodes();
  const std::size_t m = x0.size();
  const double h_min = min_segment(state.curve);
  const double e_before = monitored_energy(state.curve, state.cone, state.spec);
  const double lam = effective_lambda(state.curve, cone_mirrors(state.cone), state.spec);

  auto stage = [&](const std::vector<Point2>& base, const std::vector<Point2>& k, double c) {
    std::vector<Point2> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = base[i] + c * k[i];
    return y;
  };

  std::vector<Point2> next(m);
  try {
    const auto k1 = flow_velocity(x0, state.cone, state.spec);
    const auto k2 = flow_velocity(stage(x0, k1, 0.5 * dt), state.cone, state.spec);
    const auto k3 = flow_velocity(stage(x0, k2, 0.5 * dt), state.cone, state.spec);
    const auto k4 = flow_velocity(stage(x0, k3, dt), state.cone, state.spec);
    for (std::size_t i = 0; i < m; ++i)
      next[i] = x0[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  } catch (const InvalidInput& e) {
    throw StepperFailure(std::string("explicit stage degenerated: ") + e.what());
  } catch (const DegenerateCurvature& e) {
    throw StepperFailure(std::string("explicit stage degenerated: ") + e.what());
  }

  double max_move = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(next[i].x) || !std::isfinite(next[i].y))
      throw StepperFailure("explicit step produced non-finite nodes");
    max_move = std::max(max_move, norm(next[i] - x0[i]));
  }
  // A stable step moves nodes by a small fraction of the spacing.
  if (max_move > h_min) throw StepperFailure("explicit step unstable (node moved beyond spacing)");

  FlowState out = state;
  try {
    out.curve = project_endpoints(std::move(next), state.cone);
  } catch (const InvalidInput& e) {
    throw StepperFailure(std::string("explicit step degenerated: ") + e.what());
  }
  // All three flows are energy-decreasing, so growth signals an unstable step.
  const double e_after = monitored_energy(out.curve, state.cone, state.spec);
  if (!std::isfinite(e_after) || e_after - e_before > options.energy_tol * (1.0 + std::abs(e_before)))
    throw StepperFailure("explicit step unstable (energy increased)");
  check_tip(out.curve, options);
  out.time = state.time + dt;
  out.step_count = state.step_count + 1;
  out.last_lambda = lam;

  StepReport report;
  report.accepted = true;
  report.dt_used = dt;
  report.energy_delta = e_after - e_before;
  report.max_speed = max_move / dt;
  report.residuals = boundary_residuals(out.curve, state.cone);
  return {std::move(out), report};
}

double stability_dt(const FlowState& state, double sigma) {
  const double h = min_segment(state.curve);
  return sigma * h * h * h * h;
}

}  // namespace coneflow
