#pragma once

// Reference constructions used as oracles. Nothing here calls into the library except to
// wrap nodes in a DiscreteCurve.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "coneflow/curve.hpp"

namespace testing {

using coneflow::DiscreteCurve;
using coneflow::Point2;

inline constexpr double pi = std::numbers::pi;

// Circle of radius r about the origin, angles th_from down to th_to, uniform in angle.
inline DiscreteCurve circle_arc(double r, double th_from, double th_to, int n) {
  std::vector<Point2> p;
  for (int i = 0; i <= n; ++i) {
    const double th = th_from + (th_to - th_from) * i / n;
    p.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return DiscreteCurve(std::move(p));
}

// Centred arc spanning a cone of rotation number omega with the second ray on the x axis.
inline DiscreteCurve tip_arc(double r, double omega, int n) {
  return circle_arc(r, 2.0 * pi * omega, 0.0, n);
}

inline DiscreteCurve segment(Point2 a, Point2 b, int n) {
  std::vector<Point2> p;
  for (int i = 0; i <= n; ++i) p.push_back(a + (b - a) * (static_cast<double>(i) / n));
  return DiscreteCurve(std::move(p));
}

// Ellipse (a cos t, b sin t) for t from t_from down to t_to.
struct Ellipse {
  double a, b;
  Point2 at(double t) const { return {a * std::cos(t), b * std::sin(t)}; }
  // Signed curvature for clockwise traversal (positive on the convex side seen from inside).
  double curvature(double t) const {
    const double s = std::sin(t), c = std::cos(t);
    return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
  }
  DiscreteCurve sample(double t_from, double t_to, int n) const {
    std::vector<Point2> p;
    for (int i = 0; i <= n; ++i) p.push_back(at(t_from + (t_to - t_from) * i / n));
    return DiscreteCurve(std::move(p));
  }
};

// Polar graph r0(1 + Σ a_j cos(jπ s)), s = (θ - θ2)/(θ1 - θ2), sampled uniformly in θ.
inline DiscreteCurve polar_graph(double r0, double th1, double th2,
                                 const std::vector<std::pair<int, double>>& modes, int n) {
  std::vector<Point2> p;
  for (int i = 0; i <= n; ++i) {
    const double th = th1 - (th1 - th2) * i / n;
    const double s = (th - th2) / (th1 - th2);
    double rho = 1.0;
    for (const auto& [j, a] : modes) rho += a * std::cos(j * pi * s);
    p.push_back({r0 * rho * std::cos(th), r0 * rho * std::sin(th)});
  }
  return DiscreteCurve(std::move(p));
}

inline double sup_distance(const DiscreteCurve& a, const DiscreteCurve& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, coneflow::norm(a[i] - b[i]));
  return d;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double t = std::clamp(coneflow::dot(p - a, ab) / coneflow::dot(ab, ab), 0.0, 1.0);
  return coneflow::norm(p - (a + t * ab));
}

// Symmetric Hausdorff distance between two polylines (node-to-polyline both ways).
inline double hausdorff(const DiscreteCurve& a, const DiscreteCurve& b) {
  auto one_way = [](const DiscreteCurve& from, const DiscreteCurve& to) {
    double worst = 0.0;
    for (const auto& p : from.nodes()) {
      double best = INFINITY;
      for (std::size_t i = 0; i + 1 < to.size(); ++i)
        best = std::min(best, point_segment_distance(p, to[i], to[i + 1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

inline DiscreteCurve scaled(const DiscreteCurve& c, double s) {
  std::vector<Point2> p;
  for (const auto& q : c.nodes()) p.push_back(s * q);
  return DiscreteCurve(std::move(p));
}

// Bisection on a sign change of f over [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// The constrained-flow quartic in x = ‖k_s‖₂, written out term by term.
inline double constrained_quartic(double x, double w, double L) {
  const double tw = 2 * w;
  const double delta = 15.0 / 8.0 - 51.5 * std::pow(tw, 4);
  return delta - 28 * std::pow(L / pi, 6) * std::pow(x, 4) -
         14 * std::pow(2.0, 2.5) * w * std::pow(L / pi, 4.5) * std::pow(x, 3) -
         (10 + 2 / (pi * tw * tw) + 22 * tw * tw) * std::pow(L / pi, 3) * x * x -
         ((22 * std::pow(tw, 3) + 10 * tw) * std::sqrt(2 * std::pow(L / pi, 3)) + 14 * std::pow(tw, 3) * L / pi) * x;
}

// First sign change on a uniform grid of [0, hi], refined by a second grid inside that cell.
inline double scan_root(const std::function<double(double)>& f, double hi) {
  constexpr int kPoints = 1000000;
  double lo = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const double step = (hi - lo) / kPoints;
    double prev = f(lo);
    for (int i = 1; i <= kPoints; ++i) {
      const double x = lo + step * i;
      const double v = f(x);
      if ((v > 0) != (prev > 0)) {
        lo = x - step;
        hi = x;
        break;
      }
      prev = v;
    }
  }
  return 0.5 * (lo + hi);
}

// Smallest positive root of the constrained quartic, by scanning [0, hi].
inline double constrained_threshold_oracle(double w, double L, double hi) {
  return scan_root([&](double x) { return constrained_quartic(x, w, L); }, hi);
}

// The penalised threshold as the rescaled square of the positive root y of y² + 2By - D.
inline double penalised_threshold_oracle(double w, double L_lower, double L_upper, double lam) {
  const double B = 176 * w * w * w + 20 * w;
  const double D = (14 * lam * L_upper * L_upper + 5 * pi * pi) / (4 * pi * pi);
  const double y = bisect([&](double v) { return v * v + 2 * B * v - D; }, 0.0, D + 1.0);
  const double K = std::pow(pi, 5) * std::sqrt(2 / std::pow(pi, 3)) / (56 * lam * L_lower * L_lower + 20 * pi * pi);
  return K * K * y * y;
}

}  // namespace testing
