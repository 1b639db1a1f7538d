#include <cmath>

#include "coneflow/error.hpp"
#include "coneflow/report.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace coneflow;
using namespace testing;

namespace {

const Check* find(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

ScenarioConfig stationary() {
  ScenarioConfig c;
  c.theta1 = 0.3 * pi;
  c.flow = {FlowMode::penalised, 0.5};
  c.N = 32;
  c.t_end = 0.2;
  c.output_every = 0.01;
  return c;
}

}  // namespace

TEST_CASE("grid parsing") {
  const auto axes = parse_grid("init.r0=1,2 ; grid.N=32,64,128");
  REQUIRE(axes.size() == 2);
  CHECK(axes[0].key == "init.r0");
  CHECK(axes[1].values == std::vector<std::string>{"32", "64", "128"});

  const auto rows = expand_grid(axes);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::pair<std::string, std::string>>{{"init.r0", "1"}, {"grid.N", "32"}});
  CHECK(rows[1][1].second == "64");
  CHECK(rows[3][0].second == "2");
  CHECK(rows[5][1].second == "128");

  CHECK(expand_grid({}).size() == 1);
  CHECK_THROWS_AS(parse_grid("init.r0"), ConfigError);
  CHECK_THROWS_AS(parse_grid("init.r0="), ConfigError);
  CHECK_THROWS_AS(parse_grid("=1,2"), ConfigError);
}

TEST_CASE("noise floor") {
  DiagnosticsFrame f;
  f.L = 2.0;
  f.ks2_l[0] = 3.0;
  CHECK(noise_floor(f, 64, 0) == doctest::Approx(3e-13));
  CHECK(noise_floor(f, 64, 1) == doctest::Approx(3e-13 * 64 * 64));
  CHECK(noise_floor(f, 64, 2) / noise_floor(f, 64, 1) == doctest::Approx(64.0 * 64.0));
}

TEST_CASE("stationary run report") {
  const auto c = stationary();
  const auto r = run(c);
  const auto rep = evaluate_run(c, r.series, r.status, r.thresholds);
  CHECK(rep.passed());
  CHECK(rep.config_hash == config_hash(c));
  for (const char* name : {"status", "rotation_number", "psw_inequalities", "energy_nonincreasing",
                           "length_bounds", "curvature_pointwise"}) {
    const auto* chk = find(rep, name);
    REQUIRE(chk != nullptr);
    CHECK(chk->asserted);
    CHECK(chk->passed);
  }
  const auto j = nlohmann::json::parse(report_json(rep));
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("checks").size() == rep.checks.size());
}

TEST_CASE("report flags violations") {
  const auto c = stationary();
  auto r = run(c);
  REQUIRE(r.series.frames.size() > 3);

  auto energy = r.series;
  energy.frames[2].E_lambda += 1e-3;
  const auto e = evaluate_run(c, energy, r.status, r.thresholds);
  CHECK_FALSE(e.passed());
  CHECK_FALSE(find(e, "energy_nonincreasing")->passed);

  auto turned = r.series;
  turned.frames.back().omega_num += 1e-5;
  CHECK_FALSE(find(evaluate_run(c, turned, r.status, r.thresholds), "rotation_number")->passed);

  const auto aborted = evaluate_run(c, r.series, RunStatus::tip_collision, r.thresholds);
  CHECK_FALSE(find(aborted, "status")->passed);
}

TEST_CASE("report skips convergence checks outside the hypotheses") {
  auto c = stationary();
  c.theta1 = 0.5 * pi;
  c.t_end = 0.05;
  const auto r = run(c);
  REQUIRE_FALSE(r.thresholds.hypotheses_met);
  const auto rep = evaluate_run(c, r.series, r.status, r.thresholds);
  for (const auto& chk : rep.checks)
    if (chk.name == "ks2_decay" || chk.name.rfind("derivative_decreasing", 0) == 0) CHECK_FALSE(chk.asserted);
}
