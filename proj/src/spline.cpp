#include "spline.hpp"

#include <algorithm>

#include "coneflow/error.hpp"

namespace coneflow::detail {

ChordSpline::ChordSpline(std::span<const Point2> points) : values_(points.begin(), points.end()) {
  const std::size_t n = points.size() - 1;  // intervals
  if (points.size() < 4) throw InvalidInput("spline needs at least four points");

  knots_.resize(n + 1);
  knots_[0] = 0.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = norm(points[i + 1] - points[i]);
    if (!(d[i] > 0.0)) throw InvalidInput("spline through coincident points");
    knots_[i + 1] = knots_[i] + d[i];
  }

  std::vector<Point2> slope(n);
  for (std::size_t i = 0; i < n; ++i) slope[i] = (points[i + 1] - points[i]) / d[i];

  // Unknowns M_1..M_{n-1}; M_0 and M_n are eliminated with the not-a-knot relations.
  const std::size_t m = n - 1;
  std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0);
  std::vector<Point2> rhs(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = r + 1;
    lower[r] = d[i - 1];
    diag[r] = 2.0 * (d[i - 1] + d[i]);
    upper[r] = d[i];
    rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
  }
  {
    const double d0 = d[0], d1 = d[1];
    diag[0] = 3.0 * d0 + 2.0 * d1 + d0 * d0 / d1;
    upper[0] = d1 - d0 * d0 / d1;
    lower[0] = 0.0;
  }
  {
    const double da = d[n - 2], db = d[n - 1];
    lower[m - 1] = da - db * db / da;
    diag[m - 1] = 2.0 * da + 3.0 * db + db * db / da;
    upper[m - 1] = 0.0;
  }

  // Thomas algorithm.
  for (std::size_t r = 1; r < m; ++r) {
    const double w = lower[r] / diag[r - 1];
    diag[r] -= w * upper[r - 1];
    rhs[r] -= w * rhs[r - 1];
  }
  std::vector<Point2> inner(m);
  inner[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::size_t r = m - 1; r-- > 0;) inner[r] = (rhs[r] - upper[r] * inner[r + 1]) / diag[r];

  second_.resize(n + 1);
  for (std::size_t r = 0; r < m; ++r) second_[r + 1] = inner[r];
  second_[0] = second_[1] - (d[0] / d[1]) * (second_[2] - second_[1]);
  second_[n] = second_[n - 1] + (d[n - 1] / d[n - 2]) * (second_[n - 1] - second_[n - 2]);
}

std::size_t ChordSpline::interval(double u) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
  const auto idx = static_cast<std::ptrdiff_t>(it - knots_.begin()) - 1;
  const auto last = static_cast<std::ptrdiff_t>(knots_.size()) - 2;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, last));
}

Point2 ChordSpline::eval(double u) const {
  const std::size_t i = interval(u);
  const double d = knots_[i + 1] - knots_[i];
  const double a = knots_[i + 1] - u;
  const double b = u - knots_[i];
  return (a * a * a / (6.0 * d)) * second_[i] + (b * b * b / (6.0 * d)) * second_[i + 1] +
         (a / d) * (values_[i] - (d * d / 6.0) * second_[i]) +
         (b / d) * (values_[i + 1] - (d * d / 6.0) * second_[i + 1]);
}

Point2 ChordSpline::derivative(double u) const {
  const std::size_t i = interval(u);
  const double d = knots_[i + 1] - knots_[i];
  const double a = knots_[i + 1] - u;
  const double b = u - knots_[i];
  return (-a * a / (2.0 * d)) * second_[i] + (b * b / (2.0 * d)) * second_[i + 1] +
         (values_[i + 1] - values_[i]) / d - (d / 6.0) * (second_[i + 1] - second_[i]);
}

}  // namespace coneflow::detail
