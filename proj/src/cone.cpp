#include "coneflow/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coneflow/error.hpp"

namespace coneflow {

namespace {

// One-sided second-order first derivative at the first node of f0, f1, f2.
double one_sided_slope(double f0, double f1, double f2, double h0, double h1) {
  return -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f0 + (h0 + h1) / (h0 * h1) * f1 -
         h0 / (h1 * (h0 + h1)) * f2;
}

}  // namespace

Cone::Cone(double theta1, double theta2) : theta1_(theta1), theta2_(theta2) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (!std::isfinite(theta1) || !std::isfinite(theta2) || !(theta2 >= 0.0) ||
      !(theta2 < theta1) || !(theta1 < two_pi))
    throw InvalidInput("cone requires 0 <= theta2 < theta1 < 2*pi");
}

double Cone::omega() const noexcept { return opening() / (2.0 * std::numbers::pi); }

double BoundaryResiduals::max_neumann() const { return std::max(neumann_minus, neumann_plus); }
double BoundaryResiduals::max_flux() const { return std::max(flux_minus, flux_plus); }
double BoundaryResiduals::max_on_ray() const { return std::max(on_ray_minus, on_ray_plus); }

Point2 ray_unit(const Cone& cone, Side side) {
  const double th = side == Side::minus ? cone.theta1() : cone.theta2();
  return {std::cos(th), std::sin(th)};
}

Point2 ray_inward_normal(const Cone& cone, Side side) {
  const Point2 e = ray_unit(cone, side);
  return side == Side::minus ? -perp(e) : perp(e);
}

EndMirrors cone_mirrors(const Cone& cone) {
  return {ray_unit(cone, Side::minus), ray_unit(cone, Side::plus)};
}

Point2 project_to_ray(Point2 p, const Cone& cone, Side side) {
  const Point2 e = ray_unit(cone, side);
  const double s = dot(p, e);
  if (!(s > 0.0)) throw TipCollision("endpoint projects onto or behind the cone tip");
  return s * e;
}

double distance_to_ray(Point2 p, const Cone& cone, Side side) {
  const Point2 e = ray_unit(cone, side);
  return dot(p, e) > 0.0 ? std::abs(cross(e, p)) : norm(p);
}

BoundaryResiduals boundary_residuals(const DiscreteCurve& curve, const Cone& cone) {
  BoundaryResiduals r;
  const auto [t0, tn] = end_tangents(curve);
  r.neumann_minus = std::abs(dot(perp(t0), ray_inward_normal(cone, Side::minus)));
  r.neumann_plus = std::abs(dot(perp(tn), ray_inward_normal(cone, Side::plus)));

  const auto g = analyze(curve, cone_mirrors(cone));
  const auto& k = g.k.values;
  const auto& h = g.h;
  const std::size_t n = h.size();
  r.flux_minus = std::abs(one_sided_slope(k[0], k[1], k[2], h[0], h[1]));
  r.flux_plus = std::abs(one_sided_slope(k[n], k[n - 1], k[n - 2], h[n - 1], h[n - 2]));

  r.on_ray_minus = distance_to_ray(curve.front(), cone, Side::minus);
  r.on_ray_plus = distance_to_ray(curve.back(), cone, Side::plus);
  return r;
}

std::vector<Point2> apply_boundary_ghosts(const DiscreteCurve& curve, const Cone& cone) {
  const double tol = 1e-9 * arc_length(curve);
  if (distance_to_ray(curve.front(), cone, Side::minus) > tol ||
      distance_to_ray(curve.back(), cone, Side::plus) > tol)
    throw BoundaryViolation("endpoint is off its ray");
  return reflect_ghosts(curve, cone_mirrors(cone));
}

double tip_distance(const DiscreteCurve& curve) {
  return std::min(norm(curve.front()), norm(curve.back()));
}

DiscreteCurve centred_arc(const Cone& cone, double r, int n) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("arc radius must be positive");
  if (n < DiscreteCurve::kMinSegments) throw InvalidInput("arc needs n >= 8");
  std::vector<Point2> nodes(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double th = cone.theta1() - cone.opening() * i / n;
    nodes[i] = {r * std::cos(th), r * std::sin(th)};
  }
  return DiscreteCurve(std::move(nodes));
}

}  // namespace coneflow
