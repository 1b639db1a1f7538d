#pragma once

#include <span>
#include <vector>

#include "coneflow/curve.hpp"

namespace coneflow::detail {

// C2 cubic spline through planar points, parametrised by cumulative chord length, with
// not-a-knot end conditions. Evaluation outside [0, end()] extends the end cubics.
class ChordSpline {
 public:
  explicit ChordSpline(std::span<const Point2> points);

  double end() const { return knots_.back(); }
  Point2 eval(double u) const;
  Point2 derivative(double u) const;

 private:
  std::size_t interval(double u) const;

  std::vector<double> knots_;
  std::vector<Point2> values_;
  std::vector<Point2> second_;  // second derivatives at knots
};

}  // namespace coneflow::detail
