#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace coneflow {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator/(Point2 a, double s) { return {a.x / s, a.y / s}; }
  Point2& operator+=(Point2 b) {
    x += b.x;
    y += b.y;
    return *this;
  }
  Point2& operator-=(Point2 b) {
    x -= b.x;
    y -= b.y;
    return *this;
  }
  friend constexpr bool operator==(Point2, Point2) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
// Counterclockwise quarter turn.
constexpr Point2 perp(Point2 a) { return {-a.y, a.x}; }
inline Point2 normalized(Point2 a) { return a / norm(a); }

// Reflection of p across the line through `origin` with unit direction `dir`.
inline Point2 reflect_across(Point2 p, Point2 origin, Point2 dir) {
  const Point2 d = p - origin;
  return origin + 2.0 * dot(d, dir) * dir - d;
}

/// Ordered polyline sampling of an open planar curve.
///
/// Node 0 sits on the first cone ray (u = -1) and node N on the second (u = +1).
/// Construction enforces N >= 8, finite coordinates and distinct consecutive nodes;
/// every instance is therefore a valid regular curve.
class DiscreteCurve {
 public:
  static constexpr int kMinSegments = 8;

  explicit DiscreteCurve(std::vector<Point2> nodes);

  const std::vector<Point2>& nodes() const noexcept { return nodes_; }
  const Point2& operator[](std::size_t i) const { return nodes_[i]; }
  const Point2& front() const { return nodes_.front(); }
  const Point2& back() const { return nodes_.back(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  // Number of segments N.
  int segments() const noexcept { return static_cast<int>(nodes_.size()) - 1; }

 private:
  std::vector<Point2> nodes_;
};

// One value per node; `order` records which arc-length derivative of curvature it holds
// (0 for k itself, -1 for anything else).
struct ScalarField {
  std::vector<double> values;
  int order = -1;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

struct FrenetFrame {
  std::vector<Point2> tangent;
  std::vector<Point2> normal;  // perp(tangent)
};

// Unit directions of the mirror lines through node 0 and node N used to build ghost
// nodes. For a curve in a cone they are the ray directions; for a free curve they are
// estimated from the end geometry (see free_end_mirrors).
struct EndMirrors {
  Point2 minus;
  Point2 plus;
};

// Mirror lines perpendicular to the end tangents (see end_tangents).
EndMirrors free_end_mirrors(const DiscreteCurve& curve);

// Nodes -2..N+2: two ghosts per end obtained by reflecting the first interior nodes
// across the end mirror line. Index j of the result holds node j-2.
std::vector<Point2> reflect_ghosts(const DiscreteCurve& curve, const EndMirrors& mirrors);

// Unit tangents at node 0 and node N of the quartics through the five nodes at each end
// (cumulative-chord parameter), oriented from node 0 towards node N.
std::pair<Point2, Point2> end_tangents(const DiscreteCurve& curve);

std::vector<double> segment_lengths(const DiscreteCurve& curve);

// Trapezoidal quadrature weights in arc length (one per node).
std::vector<double> trapezoid_weights(std::span<const double> h);

double arc_length(const DiscreteCurve& curve);

// Equal-chord resampling at n segments along a C2 cubic spline through the nodes.
// Endpoints are reproduced exactly; consecutive chords agree to ~1e-14 relative.
DiscreteCurve resample_uniform(const DiscreteCurve& curve, int n);

FrenetFrame tangent_normal(const DiscreteCurve& curve);
FrenetFrame tangent_normal(const DiscreteCurve& curve, const EndMirrors& mirrors);

// k = -<Δ_s α, ν> with the three-point arc-length Laplacian. Positive on arcs centred at
// the cone tip (traversed from the first ray to the second).
ScalarField curvature(const DiscreteCurve& curve);
ScalarField curvature(const DiscreteCurve& curve, const EndMirrors& mirrors);

// ℓ-th arc-length derivative, 0 <= ℓ <= 4. Even orders use the compact three-point second
// difference, odd orders one central first difference on top of that. Every stage uses
// even-reflection ghosts, so odd derivatives vanish at both ends.
ScalarField curvature_derivative(const ScalarField& field, const DiscreteCurve& curve, int order);

double integrate(const ScalarField& field, const DiscreteCurve& curve);
double integrate(std::span<const double> values, std::span<const double> weights);

double average_curvature(const DiscreteCurve& curve);

// (1/2π) times the total signed turning of the polyline, including half the turning at
// each end measured against the mirror-line tangent. With ray mirrors this is the discrete
// Gauss-Bonnet identity and reproduces (θ1-θ2)/2π to rounding.
double rotation_number(const DiscreteCurve& curve);
double rotation_number(const DiscreteCurve& curve, const EndMirrors& mirrors);

double enclosed_area(const DiscreteCurve& curve);
double enclosed_area(const DiscreteCurve& curve, const EndMirrors& mirrors);

// max over interior nodes of |∂_s(-k_s ν + ½k²τ) + (k_ss + ½k³)ν|.
double divergence_form_residual(const DiscreteCurve& curve);
double divergence_form_residual(const DiscreteCurve& curve, const EndMirrors& mirrors);

/// Everything the flow and the monitors need about one curve, computed in one pass.
struct CurveGeometry {
  std::vector<double> h;        // segment lengths, size N
  std::vector<double> weights;  // trapezoid weights, size N+1
  FrenetFrame frame;
  ScalarField k;
  double length = 0.0;
};

CurveGeometry analyze(const DiscreteCurve& curve, const EndMirrors& mirrors);

// Poincaré-Sobolev-Wirtinger checks on the curvature:
//   ∫(k-k̄)² ≤ (L²/π²)∫k_s² + tol·(1+∫k_s²)   and   ‖k-k̄‖∞² ≤ (2L/π)∫k_s² + tol.
struct PswCheck {
  double l2_lhs = 0.0;
  double l2_rhs = 0.0;
  double sup_lhs = 0.0;
  double sup_rhs = 0.0;
  bool l2_ok = false;
  bool sup_ok = false;
};

PswCheck psw_check(double length, double dev_sq_integral, double sup_dev, double ks2,
                   double tol = 1e-8);
PswCheck psw_check(const DiscreteCurve& curve, const EndMirrors& mirrors, double tol = 1e-8);

}  // namespace coneflow
