#include <cmath>
#include <random>

#include "coneflow/curve.hpp"
#include "coneflow/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coneflow;
using namespace testing;

namespace {

double max_abs(const std::vector<double>& v, double target) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - target));
  return m;
}

double order_ratio(const std::function<double(int)>& error, int n) { return error(n) / error(2 * n); }

}  // namespace

TEST_CASE("curve construction rejects degenerate input") {
  CHECK_THROWS_AS(DiscreteCurve(std::vector<Point2>(8)), InvalidInput);
  std::vector<Point2> p;
  for (int i = 0; i <= 8; ++i) p.push_back({static_cast<double>(i), 0.0});
  p[4] = p[3];
  CHECK_THROWS_AS(DiscreteCurve{p}, InvalidInput);
  p[4] = {NAN, 0.0};
  CHECK_THROWS_AS(DiscreteCurve{p}, InvalidInput);
}

TEST_CASE("arc length") {
  SUBCASE("centred arc converges at second order") {
    auto err = [](int n) { return std::abs(arc_length(tip_arc(2.0, 0.5, n)) - 2.0 * pi); };
    CHECK(err(64) < 1e-2);
    const double ratio = order_ratio(err, 64);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
  SUBCASE("unit segment in ten pieces") {
    CHECK(arc_length(segment({0, 0}, {1, 0}, 10)) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("resample_uniform") {
  SUBCASE("arc samples doubled stay on the circle at third order") {
    for (int n : {16, 32, 64}) {
      const auto c = resample_uniform(tip_arc(1.0, 0.3, n), 2 * n);
      const double h = 2.0 * pi * 0.3 / n;
      double off = 0.0;
      for (const auto& p : c.nodes()) off = std::max(off, std::abs(norm(p) - 1.0));
      CHECK(off <= h * h * h);
    }
  }
  SUBCASE("uniform input is a fixed point") {
    const auto c = tip_arc(1.5, 0.2, 40);
    CHECK(sup_distance(resample_uniform(c, 40), c) <= 1e-12);
  }
  SUBCASE("clustered nodes become equal chords") {
    std::vector<Point2> p;
    for (int i = 0; i <= 40; ++i) {
      const double u = std::pow(static_cast<double>(i) / 40, 2.5);
      p.push_back({std::cos(1.2 * (1 - u)), std::sin(1.2 * (1 - u))});
    }
    const auto c = resample_uniform(DiscreteCurve(p), 40);
    const auto h = segment_lengths(c);
    const auto [mn, mx] = std::minmax_element(h.begin(), h.end());
    CHECK(*mx / *mn <= 1.0 + 1e-10);
    CHECK(c.front() == p.front());
    CHECK(c.back() == p.back());
  }
  SUBCASE("too few segments") { CHECK_THROWS_AS(resample_uniform(tip_arc(1, 0.2, 16), 4), InvalidInput); }
}

TEST_CASE("tangent and normal") {
  SUBCASE("normal is the outward radius on a centred arc") {
    const auto c = tip_arc(1.0, 0.25, 64);
    const auto f = tangent_normal(c);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, norm(f.normal[i] - normalized(c[i])));
    CHECK(worst <= 1e-3);
  }
  SUBCASE("straight segment") {
    const auto f = tangent_normal(segment({0, 0}, {2, 0}, 10));
    for (std::size_t i = 1; i + 1 < f.tangent.size(); ++i) {
      CHECK(f.tangent[i].x == doctest::Approx(1.0));
      CHECK(std::abs(f.tangent[i].y) < 1e-15);
      CHECK(f.normal[i].y == doctest::Approx(1.0));
    }
  }
  SUBCASE("orthonormal on a perturbed arc") {
    const auto c = polar_graph(1.0, 0.6 * pi, 0.0, {{2, 0.05}, {3, -0.02}}, 50);
    const auto f = tangent_normal(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(std::abs(dot(f.tangent[i], f.normal[i])) <= 1e-12);
      CHECK(std::abs(norm(f.tangent[i]) - 1.0) <= 1e-12);
      CHECK(std::abs(norm(f.normal[i]) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("curvature") {
  SUBCASE("positive and equal to 1/r on centred arcs") {
    const auto k = curvature(tip_arc(2.0, 0.5, 64));
    CHECK(k.order == 0);
    CHECK(max_abs(k.values, 0.5) <= 1e-3);
    for (double v : k.values) CHECK(v > 0.0);
  }
  SUBCASE("zero on a segment") { CHECK(max_abs(curvature(segment({0, 0}, {1, 1}, 12)).values, 0.0) <= 1e-10); }
  SUBCASE("ellipse against the analytic curvature, second order") {
    const Ellipse e{2.0, 1.0};
    auto err = [&](int n) {
      const double t0 = pi / 2, t1 = 0.0;
      const auto k = curvature(e.sample(t0, t1, n));
      double worst = 0.0;
      for (int i = 0; i <= n; ++i) worst = std::max(worst, std::abs(k[i] - e.curvature(t0 + (t1 - t0) * i / n)));
      return worst;
    };
    CHECK(err(64) < 1e-2);
    const double ratio = order_ratio(err, 64);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("curvature derivatives") {
  SUBCASE("constant fields have zero derivatives") {
    const auto c = polar_graph(1.0, 0.5 * pi, 0.1, {{2, 0.03}}, 40);
    const ScalarField f{std::vector<double>(c.size(), 3.0), 0};
    for (int l = 1; l <= 4; ++l) CHECK(max_abs(curvature_derivative(f, c, l).values, 0.0) <= 1e-10);
  }
  SUBCASE("k_s vanishes on a centred arc") {
    const auto c = tip_arc(1.0, 0.3, 48);
    CHECK(max_abs(curvature_derivative(curvature(c), c, 1).values, 0.0) <= 1e-10);
  }
  SUBCASE("cosine field in arc length") {
    auto err = [](int n, int order) {
      const auto c = tip_arc(1.0, 0.4, n);
      const double L = arc_length(c);
      const auto h = segment_lengths(c);
      std::vector<double> sigma{0.0}, vals;
      for (double x : h) sigma.push_back(sigma.back() + x);
      for (double s : sigma) vals.push_back(std::cos(pi * s / L));
      const auto d = curvature_derivative(ScalarField{vals, -1}, c, order);
      double worst = 0.0;
      for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double w = pi / L, s = sigma[i];
        const double exact = order == 1 ? -w * std::sin(w * s) : -w * w * std::cos(w * s);
        worst = std::max(worst, std::abs(d[i] - exact));
      }
      return worst;
    };
    for (int order : {1, 2}) {
      CHECK(err(64, order) < 1e-2);
      const double ratio = err(64, order) / err(128, order);
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
    }
  }
  SUBCASE("order outside 0..4") {
    const auto c = tip_arc(1.0, 0.3, 16);
    CHECK_THROWS_AS(curvature_derivative(curvature(c), c, 5), UnsupportedOrder);
  }
  SUBCASE("order tag accumulates") {
    const auto c = tip_arc(1.0, 0.3, 16);
    CHECK(curvature_derivative(curvature(c), c, 2).order == 2);
  }
}

TEST_CASE("integration and averages") {
  const auto c = tip_arc(2.0, 0.5, 128);
  SUBCASE("constant one integrates to the length") {
    CHECK(integrate(ScalarField{std::vector<double>(c.size(), 1.0), -1}, c) ==
          doctest::Approx(arc_length(c)).epsilon(1e-12));
  }
  SUBCASE("k and k squared") {
    auto k = curvature(c);
    CHECK(integrate(k, c) == doctest::Approx(pi).epsilon(1e-3));
    for (auto& v : k.values) v *= v;
    CHECK(integrate(k, c) == doctest::Approx(pi / 2).epsilon(1e-3));
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(integrate(ScalarField{std::vector<double>(3, 1.0), -1}, c), InvalidInput);
  }
  SUBCASE("average curvature") {
    CHECK(average_curvature(c) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(average_curvature(segment({0, 0}, {1, 0}, 9))) < 1e-12);
    const auto p = polar_graph(1.0, pi, 0.0, {{2, 0.05}}, 128);
    CHECK(average_curvature(p) == doctest::Approx(pi / arc_length(p)).epsilon(1e-3));
  }
}

TEST_CASE("rotation number") {
  CHECK(rotation_number(tip_arc(1.0, 0.3, 64)) == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(rotation_number(tip_arc(1.0, 1.0, 128)) == doctest::Approx(1.0).epsilon(1e-4));
  const int n = 64;
  const auto p = polar_graph(1.0, 0.6 * pi, 0.0, {{2, 0.02}}, n);
  CHECK(std::abs(rotation_number(p) - 0.3) <= 5.0 / (n * n));
}

TEST_CASE("enclosed area") {
  CHECK(enclosed_area(tip_arc(1.0, 0.25, 128)) == doctest::Approx(pi / 4).epsilon(1e-3));
  CHECK(enclosed_area(tip_arc(2.0, 0.5, 128)) == doctest::Approx(2 * pi).epsilon(1e-3));
  const auto p = polar_graph(1.0, 0.6 * pi, 0.0, {{2, 0.05}}, 128);
  CHECK(enclosed_area(scaled(p, 1.7)) == doctest::Approx(1.7 * 1.7 * enclosed_area(p)).epsilon(1e-3));
  auto err = [](int n) { return std::abs(enclosed_area(tip_arc(1.0, 0.25, n)) - pi / 4); };
  const double ratio = err(64) / err(128);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("divergence form residual") {
  CHECK(divergence_form_residual(segment({0, 0}, {1, 0.5}, 20)) <= 1e-10);
  CHECK(divergence_form_residual(tip_arc(1.0, 0.3, 64)) <= 1e-2);
  auto res = [](int n) { return divergence_form_residual(polar_graph(1.0, 0.6 * pi, 0.0, {{2, 0.05}}, n)); };
  const double ratio = res(64) / res(128);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("PSW inequalities on random smooth curves") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amp(-0.08, 0.08);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<int, double>> modes;
    for (int j = 2; j <= 6; j += 2) modes.emplace_back(j, amp(rng));
    const auto c = polar_graph(1.0 + trial * 0.1, 0.5 * pi, 0.0, modes, 96);
    EndMirrors mirrors{{0.0, 1.0}, {1.0, 0.0}};
    const auto chk = psw_check(c, mirrors);
    CHECK(chk.l2_ok);
    CHECK(chk.sup_ok);
  }
}
