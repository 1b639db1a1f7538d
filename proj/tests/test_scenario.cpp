#include <cmath>
#include <string>

#include "coneflow/error.hpp"
#include "coneflow/scenario.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace coneflow;
using namespace testing;

namespace {

const char* kMinimal = R"(cone.theta1 = 0.3pi
cone.theta2 = 0
flow.mode = penalised
flow.lambda = 0.5
init.r0 = 1
grid.N = 32
time.t_end = 0.1
)";

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool names(const std::vector<ConfigIssue>& issues, const std::string& path, const std::string& fragment) {
  for (const auto& i : issues)
    if (i.path == path && i.rule.find(fragment) != std::string::npos) return true;
  return false;
}

ScenarioConfig tweak(const std::vector<std::pair<std::string, std::string>>& kv) {
  return with_overrides(parse_config(kMinimal), kv);
}

}  // namespace

TEST_CASE("parse minimal config") {
  const auto c = parse_config(kMinimal);
  CHECK(c.theta1 == doctest::Approx(0.3 * pi));
  CHECK(c.theta2 == 0.0);
  CHECK(c.flow.mode == FlowMode::penalised);
  CHECK(c.flow.lambda == 0.5);
  CHECK(c.N == 32);
  CHECK(c.modes.empty());
  CHECK(c.stepper == StepperKind::semi_implicit);
  CHECK(c.options.sigma_explicit == 0.05);
  CHECK(c.options.sigma_implicit == 0.2);
  CHECK(c.options.resample_every == 10);
  CHECK(c.output_interval() == doctest::Approx(0.001));
}

TEST_CASE("config errors") {
  const std::string base = kMinimal;
  // Replaces the value of an existing key, or appends the line.
  auto with = [&](const std::string& key, const std::string& value) {
    std::string out = base;
    const auto at = out.find(key + " =");
    if (at == std::string::npos) return out + key + " = " + value + "\n";
    const auto end = out.find('\n', at);
    return out.replace(at, end - at, key + " = " + value);
  };
  CHECK(names(issues_of(with("cone.theta2", "0.4pi")), "cone.theta2", "0 <= theta2 < theta1"));
  CHECK(names(issues_of(with("flow.lambda", "0")), "flow.lambda", "for any constant lambda > 0"));
  CHECK(names(issues_of(with("flow.lambda", "-1")), "flow.lambda", "lambda > 0"));
  CHECK(names(issues_of(with("grid.M", "3")), "grid.M", "unknown key"));
  CHECK(names(issues_of(with("init.modes", "2:0.3")), "init.modes", "|a_j| < 0.2"));
  CHECK(names(issues_of(with("time.t_end", "0")), "time.t_end", "> 0"));
  CHECK(names(issues_of(with("grid.N", "many")), "grid.N", "integer"));
  CHECK(names(issues_of(base + "no equals sign\n"), "line 8", ""));
  CHECK(names(issues_of(base + "grid.N = 64\n"), "grid.N", "duplicate"));
  CHECK(names(issues_of("flow.mode = free\n"), "cone.theta1", "required"));

  // Every problem is reported, not just the first.
  CHECK(issues_of(with("grid.N", "many") + "stepper.kind = leapfrog\n").size() == 2);
  CHECK(issues_of(base + "tol.energy = -1\ntol.psw = 0\n").size() == 2);
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), IoError);
}

TEST_CASE("config text round trip and hash") {
  const auto c = tweak({{"init.modes", "2:0.01, 3:-0.002"},
                        {"init.seed", "7"},
                        {"init.random_modes", "3"},
                        {"init.random_amplitude", "1e-3"},
                        {"time.dense_until", "0.01"},
                        {"time.dense_every", "0.001"},
                        {"stepper.sigma", "0.1"}});
  const auto text = config_to_text(c);
  const auto back = parse_config(text);
  CHECK(config_to_text(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  CHECK(back.options.sigma_explicit == 0.1);
  REQUIRE(back.modes.size() == 2);
  CHECK(back.modes[1].amplitude == -0.002);
  CHECK(config_hash(tweak({{"grid.N", "33"}})) != config_hash(parse_config(kMinimal)));
}

TEST_CASE("seeded modes") {
  const auto c = tweak({{"init.seed", "11"}, {"init.random_modes", "4"}, {"init.random_amplitude", "0.01"}});
  const auto a = all_modes(c);
  CHECK(a.size() == 4);
  for (const auto& m : a) CHECK(std::abs(m.amplitude) <= 0.01);
  const auto again = all_modes(c);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].amplitude == again[i].amplitude);
  const auto other = all_modes(with_overrides(c, {{"init.seed", "12"}}));
  CHECK(other[0].amplitude != a[0].amplitude);
}

TEST_CASE("output times") {
  auto c = tweak({{"time.t_end", "1"}, {"time.output_every", "0.25"}});
  auto t = c.output_times();
  REQUIRE(t.size() == 4);
  CHECK(t.back() == 1.0);
  c = with_overrides(c, {{"time.dense_until", "0.1"}, {"time.dense_every", "0.05"}});
  t = c.output_times();
  REQUIRE(t.size() == 6);
  CHECK(t[0] == doctest::Approx(0.05));
  CHECK(t[2] == doctest::Approx(0.35));
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
}

TEST_CASE("initial curves") {
  const auto c = tweak({{"grid.N", "48"}, {"init.r0", "1.5"}});
  const auto arc = gen_initial(c);
  CHECK(sup_distance(arc, centred_arc(c.cone(), 1.5, 48)) <= 1e-14);

  const auto p = gen_initial(with_overrides(c, {{"init.modes", "2:0.01"}, {"init.r0", "1"}}));
  const auto res = boundary_residuals(p, c.cone());
  CHECK(res.max_neumann() <= 1e-4);
  CHECK(res.max_on_ray() <= 1e-12);
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    CHECK(norm(p[i + 1] - p[i]) == doctest::Approx(arc_length(p) / 48).epsilon(1e-6));

  CHECK_THROWS_AS(gen_initial(with_overrides(c, {{"tol.tip", "5"}})), ConfigError);
}

TEST_CASE("threshold checks") {
  const auto ok = check_thresholds(tweak({{"cone.theta1", "0.3pi"}, {"init.modes", "2:1e-4"}}));
  CHECK(ok.report.hypotheses_met);
  CHECK(ok.report.smallness_penalised > 0.0);
  CHECK(ok.mode_j == 2);
  REQUIRE(ok.max_compliant_amplitude > 0.0);

  // The bisected amplitude sits on the boundary of the hypothesis.
  auto at = [&](double a) {
    const auto cfg = tweak({{"init.modes", "2:" + std::to_string(a)}});
    return threshold_report(gen_initial(cfg), cfg.cone(), cfg.flow).hypotheses_met;
  };
  CHECK(at(0.95 * ok.max_compliant_amplitude));
  CHECK_FALSE(at(1.05 * ok.max_compliant_amplitude));

  const auto wide = check_thresholds(tweak({{"cone.theta1", "0.5pi"}}));
  CHECK_FALSE(wide.report.hypotheses_met);
  CHECK(wide.max_compliant_amplitude == 0.0);

  const auto con = check_thresholds(tweak({{"cone.theta1", "0.4pi"}, {"flow.mode", "constrained"},
                                           {"flow.lambda", "0"}}));
  CHECK(con.report.hypotheses_met);
  CHECK(con.report.smallness_constrained == smallness_constrained(0.2, con.report.L0).value);
}

TEST_CASE("reference radius") {
  const auto c = tweak({});
  CHECK(reference_radius(c, 1.0, 3.0) == doctest::Approx(1.0));
  const auto f = tweak({{"flow.mode", "free"}, {"flow.lambda", "0"}});
  const double L0 = 2 * pi * 0.15;
  CHECK(reference_radius(f, L0, 0.5) == doctest::Approx(std::pow(2.0, 0.25)));
  const auto k = tweak({{"flow.mode", "constrained"}, {"flow.lambda", "0"}});
  CHECK(reference_radius(k, 2.0, 1.0) == doctest::Approx(2.0 / (2 * pi * 0.15)));
  CHECK(reference_radius(with_overrides(k, {{"output.reference", "none"}}), 2.0, 1.0) == 0.0);
}

TEST_CASE("runs") {
  SUBCASE("stationary penalised arc") {
    const auto r = run(tweak({{"time.t_end", "0.2"}, {"time.output_every", "0.05"}}));
    CHECK(r.status == RunStatus::completed);
    REQUIRE(r.series.frames.size() == 5);
    CHECK(r.series.frames.front().t == 0.0);
    CHECK(r.series.frames.back().t == doctest::Approx(0.2));
    CHECK(r.series.frames.back().kmax_dev <= 1e-6);
    CHECK(r.series.config_hash == config_hash(tweak({{"time.t_end", "0.2"}, {"time.output_every", "0.05"}})));
    CHECK(r.steps > 0);
  }
  SUBCASE("free arc follows the self-similar law") {
    const auto c = tweak({{"cone.theta1", "0.6pi"}, {"flow.mode", "free"}, {"flow.lambda", "0"},
                          {"grid.N", "64"}, {"time.t_end", "0.5"}, {"time.output_every", "0.1"}});
    const auto r = run(c);
    REQUIRE(r.status == RunStatus::completed);
    for (const auto& f : r.series.frames)
      CHECK(std::abs(f.L / (2 * pi * 0.3) - std::pow(1 + 2 * f.t, 0.25)) <= 5e-3);
  }
  SUBCASE("constrained run keeps its length") {
    const auto c = tweak({{"cone.theta1", "0.4pi"}, {"flow.mode", "constrained"}, {"flow.lambda", "0"},
                          {"init.modes", "2:0.002"}, {"time.t_end", "0.5"}, {"time.output_every", "0.05"}});
    const auto r = run(c);
    REQUIRE(r.status == RunStatus::completed);
    const double L0 = r.series.frames.front().L;
    for (const auto& f : r.series.frames) CHECK(std::abs(f.L - L0) / L0 <= 1e-4);
  }
  SUBCASE("runs are deterministic") {
    const auto c = tweak({{"init.modes", "2:0.005"}, {"init.seed", "3"}, {"init.random_modes", "2"},
                          {"init.random_amplitude", "0.001"}, {"time.output_every", "0.02"}});
    const auto a = run(c), b = run(c);
    REQUIRE(a.series.frames.size() == b.series.frames.size());
    for (std::size_t i = 0; i < a.series.frames.size(); ++i) {
      CHECK(a.series.frames[i].L == b.series.frames[i].L);
      CHECK(a.series.frames[i].ks2 == b.series.frames[i].ks2);
      CHECK(a.series.frames[i].E_lambda == b.series.frames[i].E_lambda);
    }
  }
  SUBCASE("an unstable explicit run aborts and keeps its frames") {
    const auto r = run(tweak({{"init.modes", "2:0.01"}, {"stepper.kind", "explicit"}, {"stepper.sigma", "5"}}));
    CHECK(r.status == RunStatus::stepper_failure);
    CHECK_FALSE(r.message.empty());
    CHECK(r.series.frames.size() >= 1);
  }
  SUBCASE("observer sees every frame") {
    std::size_t seen = 0;
    const auto r = run(tweak({{"time.output_every", "0.05"}}),
                       [&](const FlowState&, const DiagnosticsFrame&, std::size_t i) { CHECK(i == seen++); });
    CHECK(seen == r.series.frames.size());
  }
}
