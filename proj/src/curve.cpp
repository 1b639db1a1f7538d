#include "coneflow/curve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "coneflow/error.hpp"
#include "spline.hpp"

namespace coneflow {

namespace {

// Derivative at t[0] of the quartic interpolating (t[j], f[j]).
template <typename T>
T lagrange_slope(const std::array<double, 5>& t, const std::array<T, 5>& f) {
  T d{};
  for (std::size_t j = 0; j < 5; ++j) {
    double w = 0.0;
    if (j == 0) {
      for (std::size_t m = 1; m < 5; ++m) w += 1.0 / (t[0] - t[m]);
    } else {
      w = 1.0 / (t[j] - t[0]);
      for (std::size_t m = 1; m < 5; ++m)
        if (m != j) w *= (t[0] - t[m]) / (t[j] - t[m]);
    }
    d += w * f[j];
  }
  return d;
}

// Unit tangent at x[0], oriented towards x[1]. The nodes are written in polar form about
// the centre of the circle through x[0..2] and the radius is interpolated by a quartic in
// the angle, which is exact on circles and fourth order otherwise. Nearly straight ends
// use a Cartesian quartic in cumulative chord instead.
Point2 end_tangent(const std::array<Point2, 5>& x) {
  const Point2 a = x[1] - x[0];
  const Point2 b = x[2] - x[0];
  const double twice_area = cross(a, b);
  std::array<double, 5> t{};
  for (std::size_t i = 1; i < 5; ++i) t[i] = t[i - 1] + norm(x[i] - x[i - 1]);
  const double kappa = 2.0 * std::abs(twice_area) / (norm(a) * norm(b) * norm(b - a));
  Point2 d;
  if (kappa * t[4] < 1e-3) {
    d = lagrange_slope(t, x);
  } else {
    const Point2 c = x[0] + Point2{b.y * dot(a, a) - a.y * dot(b, b), a.x * dot(b, b) - b.x * dot(a, a)} /
                                (2.0 * twice_area);
    std::array<double, 5> psi{}, rho{};
    const double psi0 = std::atan2(x[0].y - c.y, x[0].x - c.x);
    for (std::size_t i = 0; i < 5; ++i) {
      const Point2 r = x[i] - c;
      psi[i] = std::remainder(std::atan2(r.y, r.x) - psi0, 2.0 * std::numbers::pi);
      rho[i] = norm(r);
    }
    const Point2 er = (x[0] - c) / rho[0];
    d = lagrange_slope(psi, rho) * er + rho[0] * perp(er);
  }
  d = normalized(d);
  return dot(d, a) > 0.0 ? d : -d;
}

std::array<Point2, 5> head(const std::vector<Point2>& x) { return {x[0], x[1], x[2], x[3], x[4]}; }

std::array<Point2, 5> tail(const std::vector<Point2>& x) {
  const std::size_t n = x.size() - 1;
  return {x[n], x[n - 1], x[n - 2], x[n - 3], x[n - 4]};
}

// Three-point first derivative on a nonuniform grid.
template <typename T>
T first_diff(const T& fl, const T& fc, const T& fr, double hl, double hr) {
  return (-hr / (hl * (hl + hr))) * fl + ((hr - hl) / (hl * hr)) * fc +
         (hl / (hr * (hl + hr))) * fr;
}

template <typename T>
T second_diff(const T& fl, const T& fc, const T& fr, double hl, double hr) {
  return (2.0 / (hl + hr)) * ((1.0 / hr) * (fr - fc) - (1.0 / hl) * (fc - fl));
}

enum class Stencil { first, second };

// Differentiate a nodal field whose ghost values are its even reflection.
std::vector<double> even_diff(std::span<const double> f, std::span<const double> h, Stencil s) {
  const std::size_t n = h.size();
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double fl = i == 0 ? f[1] : f[i - 1];
    const double fr = i == n ? f[n - 1] : f[i + 1];
    const double hl = i == 0 ? h[0] : h[i - 1];
    const double hr = i == n ? h[n - 1] : h[i];
    out[i] = s == Stencil::first ? first_diff(fl, f[i], fr, hl, hr)
                                 : second_diff(fl, f[i], fr, hl, hr);
  }
  return out;
}

double max_abs_deviation(std::span<const double> v, double centre) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - centre));
  return m;
}

}  // namespace

DiscreteCurve::DiscreteCurve(std::vector<Point2> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < static_cast<std::size_t>(kMinSegments) + 1)
    throw InvalidInput("curve needs at least " + std::to_string(kMinSegments) + " segments");
  for (const auto& p : nodes_)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("non-finite node");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(norm(nodes_[i] - nodes_[i - 1]) > 0.0))
      throw InvalidInput("coincident consecutive nodes at index " + std::to_string(i));
}

EndMirrors free_end_mirrors(const DiscreteCurve& curve) {
  // The mirror line is normal to the end tangent.
  return {perp(end_tangent(head(curve.nodes()))), perp(end_tangent(tail(curve.nodes())))};
}

std::pair<Point2, Point2> end_tangents(const DiscreteCurve& curve) {
  return {end_tangent(head(curve.nodes())), -end_tangent(tail(curve.nodes()))};
}

std::vector<Point2> reflect_ghosts(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto& x = curve.nodes();
  const std::size_t n = x.size() - 1;
  std::vector<Point2> ext;
  ext.reserve(n + 5);
  ext.push_back(reflect_across(x[2], x[0], mirrors.minus));
  ext.push_back(reflect_across(x[1], x[0], mirrors.minus));
  ext.insert(ext.end(), x.begin(), x.end());
  ext.push_back(reflect_across(x[n - 1], x[n], mirrors.plus));
  ext.push_back(reflect_across(x[n - 2], x[n], mirrors.plus));
  return ext;
}

std::vector<double> segment_lengths(const DiscreteCurve& curve) {
  const auto& x = curve.nodes();
  std::vector<double> h(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) h[i] = norm(x[i + 1] - x[i]);
  return h;
}

std::vector<double> trapezoid_weights(std::span<const double> h) {
  std::vector<double> w(h.size() + 1, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    w[i] += 0.5 * h[i];
    w[i + 1] += 0.5 * h[i];
  }
  return w;
}

double arc_length(const DiscreteCurve& curve) {
  double sum = 0.0;
  for (double hi : segment_lengths(curve)) sum += hi;
  return sum;
}

DiscreteCurve resample_uniform(const DiscreteCurve& curve, int n) {
  if (n < DiscreteCurve::kMinSegments) throw InvalidInput("resample needs n >= 8");
  const detail::ChordSpline spline(curve.nodes());
  const double total = spline.end();
  const Point2 last = curve.back();

  // Parameter of the point at chord distance c from P(u0), beyond u0.
  auto next_param = [&](double u0, Point2 p, double c) {
    auto g = [&](double u) {
      const Point2 q = spline.eval(u) - p;
      return dot(q, q) - c * c;
    };
    double lo = u0;
    double hi = u0 + c;
    for (int k = 0; g(hi) < 0.0 && k < 60; ++k) hi = u0 + (hi - u0) * 2.0;
    double u = std::clamp(u0 + c, lo, hi);
    for (int it = 0; it < 100; ++it) {
      const Point2 q = spline.eval(u) - p;
      const double gv = dot(q, q) - c * c;
      if (gv < 0.0) lo = u;
      else hi = u;
      const double gp = 2.0 * dot(q, spline.derivative(u));
      double next = gp > 0.0 ? u - gv / gp : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - u);
      u = next;
      if (step <= 1e-16 * (total + std::abs(u)) || hi - lo <= 1e-16 * total) break;
    }
    return u;
  };

  auto march = [&](double c, std::vector<Point2>* out) {
    double u = 0.0;
    Point2 p = curve.front();
    if (out) out->push_back(p);
    for (int i = 1; i < n; ++i) {
      u = next_param(u, p, c);
      p = spline.eval(u);
      if (out) out->push_back(p);
    }
    return next_param(u, p, c) - total;
  };

  // Secant on the chord length, safeguarded by a bracket (F is increasing in c).
  double c0 = total / n;
  double f0 = march(c0, nullptr);
  double c1 = c0 * (1.0 - 1e-3);
  double f1 = march(c1, nullptr);
  double lo = 0.0, hi = 2.0 * total / n;
  for (int it = 0; it < 200 && std::abs(f1) > 1e-14 * total; ++it) {
    if (f1 < 0.0) lo = std::max(lo, c1);
    else hi = std::min(hi, c1);
    double c2 = f1 != f0 ? c1 - f1 * (c1 - c0) / (f1 - f0) : 0.5 * (lo + hi);
    if (!(c2 > lo && c2 < hi)) c2 = 0.5 * (lo + hi);
    c0 = c1;
    f0 = f1;
    c1 = c2;
    f1 = march(c1, nullptr);
    if (std::abs(c1 - c0) <= 1e-16 * c1) break;
  }

  std::vector<Point2> nodes;
  nodes.reserve(n + 1);
  march(c1, &nodes);
  nodes.push_back(last);
  return DiscreteCurve(std::move(nodes));
}

CurveGeometry analyze(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto ext = reflect_ghosts(curve, mirrors);
  const std::size_t n = curve.size() - 1;
  CurveGeometry g;
  g.h = segment_lengths(curve);
  g.weights = trapezoid_weights(g.h);
  for (double hi : g.h) g.length += hi;
  g.frame.tangent.resize(n + 1);
  g.frame.normal.resize(n + 1);
  g.k.values.resize(n + 1);
  g.k.order = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const Point2 xl = ext[i + 1], xc = ext[i + 2], xr = ext[i + 3];
    const double hl = norm(xc - xl), hr = norm(xr - xc);
    const Point2 t = normalized(first_diff(xl, xc, xr, hl, hr));
    const Point2 nu = perp(t);
    g.frame.tangent[i] = t;
    g.frame.normal[i] = nu;
    g.k.values[i] = -dot(second_diff(xl, xc, xr, hl, hr), nu);
  }
  return g;
}

FrenetFrame tangent_normal(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  return analyze(curve, mirrors).frame;
}

FrenetFrame tangent_normal(const DiscreteCurve& curve) {
  return tangent_normal(curve, free_end_mirrors(curve));
}

ScalarField curvature(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  return analyze(curve, mirrors).k;
}

ScalarField curvature(const DiscreteCurve& curve) {
  return curvature(curve, free_end_mirrors(curve));
}

ScalarField curvature_derivative(const ScalarField& field, const DiscreteCurve& curve,
                                 int order) {
  if (order < 0) throw InvalidInput("negative derivative order");
  if (order > 4) throw UnsupportedOrder("derivative order " + std::to_string(order) + " > 4");
  if (field.size() != curve.size()) throw InvalidInput("field/curve size mismatch");
  const auto h = segment_lengths(curve);
  std::vector<double> v = field.values;
  for (int i = 0; i < order / 2; ++i) v = even_diff(v, h, Stencil::second);
  if (order % 2 == 1) v = even_diff(v, h, Stencil::first);
  return {std::move(v), field.order >= 0 ? field.order + order : -1};
}

double integrate(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw InvalidInput("integrand/weight size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * weights[i];
  return sum;
}

double integrate(const ScalarField& field, const DiscreteCurve& curve) {
  if (field.size() != curve.size()) throw InvalidInput("field/curve size mismatch");
  const auto w = trapezoid_weights(segment_lengths(curve));
  return integrate(field.values, w);
}

double average_curvature(const DiscreteCurve& curve) {
  const auto g = analyze(curve, free_end_mirrors(curve));
  return integrate(g.k.values, g.weights) / g.length;
}

double rotation_number(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto ext = reflect_ghosts(curve, mirrors);
  const std::size_t n = curve.size() - 1;
  double turning = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const Point2 a = ext[i + 2] - ext[i + 1];
    const Point2 b = ext[i + 3] - ext[i + 2];
    const double phi = std::atan2(cross(a, b), dot(a, b));
    turning += (i == 0 || i == n) ? 0.5 * phi : phi;
  }
  return -turning / (2.0 * std::numbers::pi);
}

double rotation_number(const DiscreteCurve& curve) {
  return rotation_number(curve, free_end_mirrors(curve));
}

double enclosed_area(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto g = analyze(curve, mirrors);
  double sum = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i)
    sum += g.weights[i] * dot(curve[i], g.frame.normal[i]);
  return 0.5 * sum;
}

double enclosed_area(const DiscreteCurve& curve) {
  return enclosed_area(curve, free_end_mirrors(curve));
}

double divergence_form_residual(const DiscreteCurve& curve, const EndMirrors& mirrors) {
  const auto g = analyze(curve, mirrors);
  const auto& k = g.k.values;
  const auto ks = even_diff(k, g.h, Stencil::first);
  const auto kss = even_diff(k, g.h, Stencil::second);
  const std::size_t n = curve.size() - 1;

  std::vector<Point2> flux(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    flux[i] = -ks[i] * g.frame.normal[i] + 0.5 * k[i] * k[i] * g.frame.tangent[i];

  double worst = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const Point2 div = first_diff(flux[i - 1], flux[i], flux[i + 1], g.h[i - 1], g.h[i]);
    const Point2 r = div + (kss[i] + 0.5 * k[i] * k[i] * k[i]) * g.frame.normal[i];
    worst = std::max(worst, norm(r));
  }
  return worst;
}

double divergence_form_residual(const DiscreteCurve& curve) {
  return divergence_form_residual(curve, free_end_mirrors(curve));
}

PswCheck psw_check(double length, double dev_sq_integral, double sup_dev, double ks2,
                   double tol) {
  constexpr double pi = std::numbers::pi;
  PswCheck c;
  c.l2_lhs = dev_sq_integral;
  c.l2_rhs = length * length / (pi * pi) * ks2 + tol * (1.0 + ks2);
  c.sup_lhs = sup_dev * sup_dev;
  c.sup_rhs = 2.0 * length / pi * ks2 + tol;
  c.l2_ok = c.l2_lhs <= c.l2_rhs;
  c.sup_ok = c.sup_lhs <= c.sup_rhs;
  return c;
}

PswCheck psw_check(const DiscreteCurve& curve, const EndMirrors& mirrors, double tol) {
  const auto g = analyze(curve, mirrors);
  const auto& k = g.k.values;
  const double kbar = integrate(k, g.weights) / g.length;
  std::vector<double> dev2(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) dev2[i] = (k[i] - kbar) * (k[i] - kbar);
  const auto ks = even_diff(k, g.h, Stencil::first);
  std::vector<double> ks_sq(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) ks_sq[i] = ks[i] * ks[i];
  return psw_check(g.length, integrate(dev2, g.weights), max_abs_deviation(k, kbar),
                   integrate(ks_sq, g.weights), tol);
}

}  // namespace coneflow
