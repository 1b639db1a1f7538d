#include "coneflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "coneflow/error.hpp"

namespace coneflow {

namespace {

using ld = long double;
constexpr ld kPi = std::numbers::pi_v<long double>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weighted_square(std::span<const double> f, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * f[i];
  return s;
}

double ks2_of(const DiscreteCurve& curve, const CurveGeometry& g) {
  return weighted_square(curvature_derivative(g.k, curve, 1).values, g.weights);
}

// Coefficients of the constrained-flow quartic δ - a4x⁴ - a3x³ - a2x² - a1x.
struct Quartic {
  ld delta, a4, a3, a2, a1;
  ld operator()(ld x) const { return delta - x * (a1 + x * (a2 + x * (a3 + x * a4))); }
};

Quartic constrained_quartic(double omega, double L0) {
  const ld w = omega, L = L0, tw = 2.0L * w;
  Quartic q{};
  q.delta = 15.0L / 8.0L - 103.0L / 2.0L * tw * tw * tw * tw;
  q.a4 = 28.0L * std::pow(L / kPi, 6.0L);
  q.a3 = 14.0L * std::pow(2.0L, 2.5L) * w * std::pow(L / kPi, 4.5L);
  q.a2 = (10.0L + 2.0L / (kPi * tw * tw) + 22.0L * tw * tw) * std::pow(L / kPi, 3.0L);
  q.a1 = (22.0L * tw * tw * tw + 10.0L * tw) * std::sqrt(2.0L * std::pow(L / kPi, 3.0L)) +
         14.0L * tw * tw * tw * L / kPi;
  return q;
}

ld b_omega(ld w) { return 176.0L * w * w * w + 20.0L * w; }

// Streaming median over two heaps.
class RunningMedian {
 public:
  void push(double x) {
    if (low_.empty() || x <= low_.top()) low_.push(x);
    else high_.push(x);
    if (low_.size() > high_.size() + 1) {
      high_.push(low_.top());
      low_.pop();
    } else if (high_.size() > low_.size()) {
      low_.push(high_.top());
      high_.pop();
    }
  }
  double value() const {
    return low_.size() > high_.size() ? low_.top() : 0.5 * (low_.top() + high_.top());
  }

 private:
  std::priority_queue<double> low_;
  std::priority_queue<double, std::vector<double>, std::greater<>> high_;
};

}  // namespace

DiagnosticsFrame make_frame(const DiscreteCurve& curve, const Cone& cone, const FlowSpec& spec,
                            double t) {
  const auto mirrors = cone_mirrors(cone);
  const auto g = analyze(curve, mirrors);
  DiagnosticsFrame f;
  f.t = t;
  f.L = g.length;
  for (int l = 0; l <= 3; ++l) {
    const auto d = l == 0 ? g.k : curvature_derivative(g.k, curve, l);
    f.ks2_l[static_cast<std::size_t>(l)] = weighted_square(d.values, g.weights);
  }
  f.ks2 = f.ks2_l[1];
  f.E0 = 0.5 * f.ks2_l[0];
  f.E_lambda = spec.mode == FlowMode::penalised ? f.E0 + spec.lambda * f.L : f.E0;
  f.epsilon = f.L * f.L * f.L * f.ks2;
  f.gamma = f.ks2_l[0] >= 1e-14 ? f.ks2 / (f.ks2_l[0] * f.ks2_l[0] * f.ks2_l[0]) : kNaN;
  f.kbar = integrate(g.k.values, g.weights) / f.L;

  double area = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i)
    area += g.weights[i] * dot(curve[i], g.frame.normal[i]);
  f.A = 0.5 * area;

  f.omega_num = rotation_number(curve, mirrors);
  f.omega_free = rotation_number(curve);
  if (spec.mode == FlowMode::penalised) f.lambda_used = spec.lambda;
  else if (spec.mode == FlowMode::constrained)
    f.lambda_used = f.ks2_l[0] >= 1e-14 ? lambda_constrained(curve, mirrors) : kNaN;
  f.residuals = boundary_residuals(curve, cone);
  f.tip_dist = tip_distance(curve);
  const double target = 2.0 * std::numbers::pi * cone.omega();
  for (double k : g.k.values) {
    f.kmax_dev = std::max(f.kmax_dev, std::abs(k - f.kbar));
    f.rescaled_dev = std::max(f.rescaled_dev, std::abs(f.L * k - target));
  }
  return f;
}

Energies energies(const DiscreteCurve& curve, const EndMirrors& mirrors, const FlowSpec& spec) {
  const auto g = analyze(curve, mirrors);
  Energies e;
  e.E0 = 0.5 * weighted_square(g.k.values, g.weights);
  e.E_lambda = spec.mode == FlowMode::penalised ? e.E0 + spec.lambda * g.length : e.E0;
  return e;
}

Energies energies(const DiscreteCurve& curve, const FlowSpec& spec) {
  return energies(curve, free_end_mirrors(curve), spec);
}

double epsilon(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto g = analyze(curve, mirrors);
  return g.length * g.length * g.length * ks2_of(curve, g);
}

double epsilon(const DiscreteCurve& curve) { return epsilon(curve, free_end_mirrors(curve)); }

double gamma(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto g = analyze(curve, mirrors);
  const double k2 = weighted_square(g.k.values, g.weights);
  if (k2 < 1e-14) throw DegenerateCurvature("integral of k^2 is below 1e-14");
  return ks2_of(curve, g) / (k2 * k2 * k2);
}

double gamma(const DiscreteCurve& curve) { return gamma(curve, free_end_mirrors(curve)); }

double rescaled_curvature_deviation(const DiscreteCurve& curve, const EndMirrors& mirrors,
                                    double omega) {
  const auto g = analyze(curve, mirrors);
  const double target = 2.0 * std::numbers::pi * omega;
  double worst = 0.0;
  for (double k : g.k.values) worst = std::max(worst, std::abs(g.length * k - target));
  return worst;
}

double rescaled_curvature_deviation(const DiscreteCurve& curve, double omega) {
  return rescaled_curvature_deviation(curve, free_end_mirrors(curve), omega);
}

LengthBounds length_bounds(double E_lambda_0, double omega, double lambda) {
  if (!(E_lambda_0 > 0.0) || !(omega > 0.0) || !(lambda > 0.0))
    throw InvalidInput("length bounds need positive energy, omega and lambda");
  const double pi = std::numbers::pi;
  return {2.0 * pi * pi * omega * omega / E_lambda_0, E_lambda_0 / lambda};
}

LambdaBounds lambda_bounds(double L0, double ks2, double kbar, double omega) {
  const double pi = std::numbers::pi;
  const double tw = 2.0 * pi * omega;
  return {-L0 * ks2 / (tw * tw), 2.0 * L0 / pi * ks2 + kbar * kbar};
}

double omega_bound_penalised() { return 1.0 / std::sqrt(28.0); }

double omega_bound_constrained() { return std::pow(15.0 / 6592.0, 0.25); }

Threshold smallness_penalised(double omega, double L_lower, double L_upper, double lambda) {
  if (!(omega > 0.0) || !(L_lower > 0.0) || !(L_upper > 0.0) || !(lambda > 0.0))
    throw InvalidInput("smallness_penalised needs positive arguments");
  const ld w = omega, lo = L_lower, up = L_upper, lam = lambda;
  const ld den = 56.0L * lam * lo * lo + 20.0L * kPi * kPi;
  const ld b = b_omega(w);
  const ld inner = std::sqrt(b * b + (14.0L * lam * up * up + 5.0L * kPi * kPi) / (4.0L * kPi * kPi)) - b;
  const ld value = 2.0L * std::pow(kPi, 7.0L) / (den * den) * inner * inner;
  return {static_cast<double>(value), omega <= omega_bound_penalised()};
}

double smallness_penalised_quadratic(double omega, double L_upper, double lambda) {
  const ld w = omega, up = L_upper, lam = lambda;
  const ld a = (28.0L * lam * up * up / (kPi * kPi) + 10.0L) * up * up * up / (kPi * kPi * kPi);
  const ld b = (10.0L * 2.0L * w + 22.0L * std::pow(2.0L * w, 3.0L)) *
               std::sqrt(2.0L * up * up * up / (kPi * kPi * kPi));
  // Root of 1/8 - a x² - b x written without cancellation.
  const ld x = 0.25L / (b + std::sqrt(b * b + 0.5L * a));
  return static_cast<double>(x * x);
}

double constrained_delta(double omega) {
  const double tw = 2.0 * omega;
  return 15.0 / 8.0 - 103.0 / 2.0 * tw * tw * tw * tw;
}

Threshold smallness_constrained(double omega, double L0) {
  if (!(omega > 0.0) || !(L0 > 0.0)) throw InvalidInput("smallness_constrained needs positive arguments");
  const Quartic q = constrained_quartic(omega, L0);
  const bool ok = omega < omega_bound_constrained();
  if (!(q.delta > 0.0L)) return {0.0, ok};
  // q(0) = δ > 0 and q decreases on x > 0, so the positive root is unique.
  ld lo = 0.0L, hi = 1.0L;
  while (q(hi) > 0.0L) {
    lo = hi;
    hi *= 2.0L;
    if (hi > 1e30L) throw Error("constrained quartic has no positive root");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-18L * hi; ++it) {
    const ld mid = 0.5L * (lo + hi);
    (q(mid) > 0.0L ? lo : hi) = mid;
  }
  return {static_cast<double>(0.5L * (lo + hi)), ok};
}

double epsilon_star(double omega) {
  if (!(omega > 0.0)) throw InvalidInput("epsilon_star needs omega > 0");
  const ld b = b_omega(omega);
  // √(b²+c) - b = c / (√(b²+c) + b), free of cancellation for large b.
  const ld diff = 1.25L / (std::sqrt(b * b + 1.25L) + b);
  return static_cast<double>(kPi * kPi * kPi / 200.0L * diff * diff);
}

double c_hat(double beta, double omega) {
  const ld b = beta, w = omega;
  return static_cast<double>(4.0L / (kPi * kPi * kPi) * b +
                             16.0L * std::sqrt(2.0L * w * w / (kPi * kPi * kPi)) * std::sqrt(b) +
                             48.0L * w * w);
}

double delta_star(double eps, double beta, double omega) {
  if (!(eps > 0.0) || !(beta > 0.0)) throw InvalidInput("delta_star needs positive arguments");
  if (eps > beta) throw InvalidInput("delta_star needs eps <= beta");
  const ld w = omega;
  const ld den = static_cast<ld>(beta) * c_hat(beta, omega) + 32.0L * w * w * w * w * std::pow(kPi, 4.0L);
  return static_cast<double>((std::pow(static_cast<ld>(beta) / eps, 4.0L / 3.0L) - 1.0L) / den);
}

FreeFlowConstants free_flow_constants(double beta, double omega, double epsilon1) {
  if (!(beta > 0.0) || !(omega > 0.0) || !(epsilon1 > 0.0))
    throw InvalidInput("free_flow_constants needs positive arguments");
  const ld w4pi4 = std::pow(static_cast<ld>(omega), 4.0L) * std::pow(kPi, 4.0L);
  FreeFlowConstants c;
  c.beta = beta;
  c.c_hat = c_hat(beta, omega);
  c.delta_star = epsilon1 <= beta ? delta_star(epsilon1, beta, omega) : kNaN;
  const ld c2 = static_cast<ld>(epsilon1) * c_hat(epsilon1, omega) + 32.0L * w4pi4;
  c.c2 = static_cast<double>(c2);
  c.c1 = static_cast<double>(48.0L * w4pi4 / (5.0L * c2));
  return c;
}

ThresholdReport threshold_report(const DiscreteCurve& initial, const Cone& cone,
                                 const FlowSpec& spec) {
  const auto mirrors = cone_mirrors(cone);
  const auto g = analyze(initial, mirrors);
  ThresholdReport r;
  r.mode = spec.mode;
  r.omega = cone.omega();
  r.omega_bound_penalised = omega_bound_penalised();
  r.omega_bound_constrained = omega_bound_constrained();
  r.L0 = g.length;
  r.ks2_0 = ks2_of(initial, g);
  r.epsilon_0 = r.L0 * r.L0 * r.L0 * r.ks2_0;
  const double e0 = 0.5 * weighted_square(g.k.values, g.weights);
  r.E_lambda_0 = spec.mode == FlowMode::penalised ? e0 + spec.lambda * r.L0 : e0;

  r.L_lower = r.L_upper = kNaN;
  r.smallness_penalised = r.smallness_penalised_quadratic = kNaN;
  if (spec.mode == FlowMode::penalised) {
    const auto lb = length_bounds(r.E_lambda_0, r.omega, spec.lambda);
    r.L_lower = lb.lower;
    r.L_upper = lb.upper;
    const auto sp = smallness_penalised(r.omega, lb.lower, lb.upper, spec.lambda);
    r.smallness_penalised = sp.value;
    r.smallness_penalised_quadratic = smallness_penalised_quadratic(r.omega, lb.upper, spec.lambda);
    r.flags.penalised = sp.hypothesis_ok && r.ks2_0 <= sp.value;
  }
  const auto sc = smallness_constrained(r.omega, r.L0);
  r.smallness_constrained = sc.value;
  r.flags.constrained = sc.hypothesis_ok && std::sqrt(r.ks2_0) <= sc.value;
  r.epsilon_star = epsilon_star(r.omega);
  r.flags.free = r.epsilon_0 <= r.epsilon_star;

  switch (spec.mode) {
    case FlowMode::penalised: r.hypotheses_met = r.flags.penalised; break;
    case FlowMode::constrained: r.hypotheses_met = r.flags.constrained; break;
    case FlowMode::free: r.hypotheses_met = r.flags.free; break;
  }
  return r;
}

double l4_residual(const Series& series, double omega) {
  if (series.frames.empty()) throw InvalidInput("empty series");
  const double pi = std::numbers::pi;
  const double rate = 32.0 * std::pow(omega * pi, 4.0);
  const double l0 = std::pow(series.frames.front().L, 4.0);
  const double t0 = series.frames.front().t;
  double worst = 0.0;
  for (const auto& f : series.frames) {
    const double growth = rate * (f.t - t0);
    worst = std::max(worst, std::abs(std::pow(f.L, 4.0) - l0 - growth) / std::max(1.0, growth));
  }
  return worst;
}

DecayFit decay_fit(const Series& series, const FrameSelector& field, FitMode mode,
                   const FitWindow& window) {
  if (series.frames.empty()) throw InvalidInput("empty series");
  const double l4 = std::pow(series.frames.front().L, 4.0);
  std::vector<double> xs, ys;
  for (const auto& f : series.frames) {
    if (f.t < window.t_min || f.t > window.t_max) continue;
    const double v = field(f);
    if (window.floor > 0.0 && !(v > window.floor)) continue;
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("decay fit needs positive samples");
    xs.push_back(mode == FitMode::exponential ? f.t : std::log1p(f.t / l4));
    ys.push_back(std::log(v));
  }
  const auto skip = static_cast<std::size_t>(window.skip_fraction * static_cast<double>(xs.size()));
  xs.erase(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(skip));
  ys.erase(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(skip));
  if (xs.size() < 10) throw InvalidInput("decay fit needs at least 10 frames in the window");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("decay fit window has no spread in time");
  DecayFit fit;
  fit.rate = sxy / sxx;
  fit.quality = syy > 0.0 ? std::abs(sxy) / std::sqrt(sxx * syy) : 1.0;
  fit.samples = xs.size();
  return fit;
}

std::vector<DerivativeMonitor> derivative_bound_monitor(const Series& series, int lmax,
                                                        double floor) {
  return derivative_bound_monitor(series, lmax,
                                  std::vector<double>(static_cast<std::size_t>(std::max(lmax, 0)) + 1, floor));
}

std::vector<DerivativeMonitor> derivative_bound_monitor(const Series& series, int lmax,
                                                        const std::vector<double>& floors) {
  if (lmax < 0 || lmax > 3) throw UnsupportedOrder("monitor order must be within 0..3");
  if (floors.size() < static_cast<std::size_t>(lmax) + 1)
    throw InvalidInput("need one floor per monitored order");
  std::vector<DerivativeMonitor> out;
  const auto& fr = series.frames;
  for (int l = 1; l <= lmax; ++l) {
    DerivativeMonitor m;
    m.ell = l;
    m.bounded = true;
    std::vector<double> v(fr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) {
      const double x = fr[i].ks2_l[static_cast<std::size_t>(l)];
      v[i] = x > floors[static_cast<std::size_t>(l)] ? x : 0.0;
    }
    const std::size_t start = fr.size() / 10;
    RunningMedian med;
    for (std::size_t i = 0; i < v.size(); ++i) {
      med.push(v[i]);
      if (i >= start && v[i] > 0.0 && v[i] > 10.0 * med.value()) {
        m.bounded = false;
        break;
      }
    }
    m.decreasing = v.empty() || v.back() <= v[v.size() / 2];
    out.push_back(m);
  }
  return out;
}

PswCheck psw_check(const DiagnosticsFrame& frame, double tol) {
  const double dev2 = std::max(0.0, frame.ks2_l[0] - frame.L * frame.kbar * frame.kbar);
  return psw_check(frame.L, dev2, frame.kmax_dev, frame.ks2, tol);
}

}  // namespace coneflow
