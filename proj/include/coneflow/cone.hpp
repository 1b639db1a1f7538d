#pragma once

#include <vector>

#include "coneflow/curve.hpp"

namespace coneflow {

enum class Side { minus, plus };

/// Planar cone {ρ(cos θ, sin θ) : ρ > 0, θ2 ≤ θ ≤ θ1}; requires 0 ≤ θ2 < θ1 < 2π.
class Cone {
 public:
  Cone(double theta1, double theta2);

  double theta1() const noexcept { return theta1_; }
  double theta2() const noexcept { return theta2_; }
  double opening() const noexcept { return theta1_ - theta2_; }
  double omega() const noexcept;

 private:
  double theta1_;
  double theta2_;
};

struct BoundaryResiduals {
  double neumann_minus = 0.0;
  double neumann_plus = 0.0;
  double flux_minus = 0.0;
  double flux_plus = 0.0;
  double on_ray_minus = 0.0;
  double on_ray_plus = 0.0;

  double max_neumann() const;
  double max_flux() const;
  double max_on_ray() const;
};

// (cos θ, sin θ) with minus ↔ θ1 and plus ↔ θ2.
Point2 ray_unit(const Cone& cone, Side side);
// Unit normal of the ray pointing into the cone.
Point2 ray_inward_normal(const Cone& cone, Side side);

// The ray directions, as mirror lines for ghost construction.
EndMirrors cone_mirrors(const Cone& cone);

// Nearest point on the ray. Throws TipCollision when p does not project strictly
// beyond the tip.
Point2 project_to_ray(Point2 p, const Cone& cone, Side side);

double distance_to_ray(Point2 p, const Cone& cone, Side side);

// neumann: |<ν, e>| at each endpoint with the five-point end tangents; flux: |k_s| at each
// endpoint by a one-sided second-order stencil; on_ray: endpoint distance to its ray.
BoundaryResiduals boundary_residuals(const DiscreteCurve& curve, const Cone& cone);

// Nodes -2..N+2 (index j holds node j-2) with the ghosts reflected across the rays. Throws
// BoundaryViolation if an endpoint is farther than 1e-9·L from its ray.
std::vector<Point2> apply_boundary_ghosts(const DiscreteCurve& curve, const Cone& cone);

double tip_distance(const DiscreteCurve& curve);

// n+1 samples of the arc of radius r centred at the tip, uniform in angle, from the θ1 ray
// to the θ2 ray.
DiscreteCurve centred_arc(const Cone& cone, double r, int n);

}  // namespace coneflow
