#include <cmath>

#include "coneflow/cone.hpp"
#include "coneflow/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coneflow;
using namespace testing;

TEST_CASE("cone invariants") {
  CHECK_NOTHROW(Cone(0.5, 0.0));
  CHECK_THROWS_AS(Cone(0.5, 0.5), InvalidInput);
  CHECK_THROWS_AS(Cone(0.2, 0.5), InvalidInput);
  CHECK_THROWS_AS(Cone(2 * pi, 0.1), InvalidInput);
  CHECK_THROWS_AS(Cone(1.0, -0.1), InvalidInput);
  CHECK(Cone(0.6 * pi, 0.0).omega() == doctest::Approx(0.3));
}

TEST_CASE("ray geometry") {
  const Cone cone(pi / 2, 0.0);
  CHECK(norm(ray_unit(cone, Side::minus) - Point2{0, 1}) < 1e-15);
  CHECK(norm(ray_unit(cone, Side::plus) - Point2{1, 0}) < 1e-15);
  for (double t1 : {0.3, 1.7, 4.0, 6.2}) {
    const Cone c(t1, 0.1);
    for (Side s : {Side::minus, Side::plus}) {
      CHECK(std::abs(dot(ray_unit(c, s), ray_inward_normal(c, s))) <= 1e-15);
      // The inward normal points towards the other ray's side of the cone.
      const Point2 mid = ray_unit(c, Side::minus) + ray_unit(c, Side::plus);
      if (c.opening() < pi) CHECK(dot(mid, ray_inward_normal(c, s)) > 0.0);
    }
  }
}

TEST_CASE("project_to_ray") {
  const Cone cone(pi / 2, 0.0);
  CHECK(norm(project_to_ray({2.0, 0.0}, cone, Side::plus) - Point2{2, 0}) <= 1e-15);
  CHECK(norm(project_to_ray({1.0, 1.0}, cone, Side::plus) - Point2{1, 0}) <= 1e-15);
  CHECK_THROWS_AS(project_to_ray({-1.0, 0.1}, cone, Side::plus), TipCollision);
  SUBCASE("idempotent and nonexpansive") {
    const Cone c(1.1, 0.3);
    for (Point2 p : {Point2{1.0, 0.9}, Point2{0.2, 2.0}, Point2{3.0, 0.4}}) {
      for (Side s : {Side::minus, Side::plus}) {
        if (dot(p, ray_unit(c, s)) <= 0.0) continue;
        const Point2 q = project_to_ray(p, c, s);
        CHECK(norm(project_to_ray(q, c, s) - q) <= 1e-15);
        for (double r : {0.1, 0.5, 1.0, 2.0, 5.0})
          CHECK(norm(p - q) <= norm(p - r * ray_unit(c, s)) + 1e-15);
      }
    }
  }
}

TEST_CASE("boundary residuals") {
  const Cone cone(0.6 * pi, 0.0);
  SUBCASE("centred arcs satisfy the boundary conditions") {
    for (double r : {0.5, 1.0, 3.0})
      for (int n : {16, 32, 64}) {
        const auto res = boundary_residuals(centred_arc(cone, r, n), cone);
        const double tol = 1e-10 * (1.0 + 1.0 / r);
        CHECK(res.max_neumann() <= tol);
        CHECK(res.max_flux() <= tol);
        CHECK(res.max_on_ray() <= tol);
      }
  }
  SUBCASE("an arc rotated by 0.01 rad") {
    const auto c = circle_arc(1.0, 0.6 * pi + 0.01, 0.01, 64);
    const auto res = boundary_residuals(c, cone);
    CHECK(res.neumann_plus == doctest::Approx(0.01).epsilon(0.2));
    CHECK(res.neumann_minus == doctest::Approx(0.01).epsilon(0.2));
  }
}

TEST_CASE("boundary ghosts") {
  const Cone cone(0.6 * pi, 0.0);
  SUBCASE("ghosts of a centred arc continue the circle") {
    for (int n : {32, 64}) {
      const auto ext = apply_boundary_ghosts(centred_arc(cone, 1.5, n), cone);
      REQUIRE(ext.size() == static_cast<std::size_t>(n + 5));
      const double h = 1.5 * cone.opening() / n;
      for (std::size_t j : {0u, 1u, static_cast<unsigned>(n + 3), static_cast<unsigned>(n + 4)})
        CHECK(std::abs(norm(ext[j]) - 1.5) <= h * h * h);
    }
  }
  SUBCASE("segment meeting the rays of a half-plane cone at right angles") {
    const Cone half(pi, 0.0);
    const auto seg = segment({0.5, 1.0}, {0.5, 0.0}, 10);
    const auto ext = reflect_ghosts(seg, cone_mirrors(half));
    for (const auto& p : ext) CHECK(std::abs(p.x - 0.5) <= 1e-12);
  }
  SUBCASE("k_s vanishes at the ends of a compliant curve") {
    const auto c = centred_arc(cone, 1.0, 64);
    const auto m = cone_mirrors(cone);
    const auto ks = curvature_derivative(curvature(c, m), c, 1);
    CHECK(std::abs(ks.values.front()) <= 1e-10);
    CHECK(std::abs(ks.values.back()) <= 1e-10);
    const auto p = polar_graph(1.0, 0.6 * pi, 0.0, {{2, 0.03}, {5, 0.01}}, 64);
    const auto kp = curvature_derivative(curvature(p, m), p, 1);
    CHECK(std::abs(kp.values.front()) <= 1e-10);
    CHECK(std::abs(kp.values.back()) <= 1e-10);
  }
  SUBCASE("off-ray endpoints") {
    const auto c = circle_arc(1.0, 0.6 * pi + 0.01, 0.0, 32);
    CHECK_THROWS_AS(apply_boundary_ghosts(c, cone), BoundaryViolation);
  }
}

TEST_CASE("tip distance and centred arcs") {
  const Cone cone(pi, 0.0);
  const auto c = centred_arc(cone, 1.0, 40);
  CHECK(tip_distance(c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tip_distance(scaled(c, 2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  const auto a = centred_arc(cone, 2.0, 256);
  CHECK(arc_length(a) == doctest::Approx(2 * pi).epsilon(1e-4));
  for (double k : curvature(a, cone_mirrors(cone)).values) CHECK(k == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rotation_number(a, cone_mirrors(cone)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sup_distance(a, circle_arc(2.0, pi, 0.0, 256)) <= 1e-14);
}
