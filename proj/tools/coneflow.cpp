#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "coneflow/error.hpp"
#include "coneflow/io.hpp"
#include "coneflow/report.hpp"
#include "coneflow/scenario.hpp"
#include "coneflow/svg.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace coneflow;
using nlohmann::json;

namespace {

enum Exit { kPass = 0, kAssertion = 1, kConfig = 2, kRuntime = 3 };

std::vector<std::pair<std::string, std::string>> split_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(s, "override must look like key=value");
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return kv;
}

json config_failure(const ConfigError& e) {
  json issues = json::array();
  for (const auto& i : e.issues()) issues.push_back({{"path", i.path}, {"rule", i.rule}});
  return {{"error", "config"}, {"issues", issues}};
}

struct RunOutcome {
  int code = kPass;
  json summary;
};

// Runs one config into dir; never throws for config or runtime failures.
RunOutcome run_into(const ScenarioConfig& config, const fs::path& dir, bool svg) {
  RunOutcome out;
  fs::create_directories(dir);
  const fs::path frames = dir / "frames";
  const bool draw = svg || config.svg;
  if (draw) fs::create_directories(frames);
  const Cone cone = config.cone();
  double L0 = 0.0;
  auto observer = [&](const FlowState& s, const DiagnosticsFrame& f, std::size_t index) {
    if (!draw) return;
    if (index == 0) L0 = f.L;
    SvgOptions o;
    o.reference_radius = reference_radius(config, L0, f.t);
    emit_svg(s.curve, cone, (frames / frame_filename(index)).string(), o, &f);
  };
  const RunResult result = run(config, observer);
  write_series(result.series, (dir / "series.csv").string());
  write_text((dir / "meta.json").string(), metadata_json(config, result));
  const RunReport report = evaluate_run(config, result.series, result.status, result.thresholds);
  write_text((dir / "report.json").string(), report_json(report));

  out.summary = {{"dir", dir.string()},
                 {"config_hash", config_hash(config)},
                 {"status", to_string(result.status)},
                 {"frames", result.series.frames.size()},
                 {"steps", result.steps},
                 {"wall_seconds", result.wall_seconds},
                 {"passed", report.passed()}};
  if (result.status != RunStatus::completed) {
    out.code = kRuntime;
    out.summary["message"] = result.message;
  } else if (!report.passed()) {
    out.code = kAssertion;
    json failed = json::array();
    for (const auto& c : report.checks)
      if (c.asserted && !c.passed) failed.push_back(c.name);
    out.summary["failed"] = failed;
  }
  return out;
}

int cmd_run(const std::string& cfg, const std::vector<std::string>& sets, const std::string& dir,
            bool svg) {
  const auto config = with_overrides(load_config(cfg), split_sets(sets));
  const auto outcome = run_into(config, dir, svg);
  std::cout << outcome.summary.dump(2) << '\n';
  return outcome.code;
}

int cmd_sweep(const std::string& cfg, const std::string& grid, const std::vector<std::string>& sets,
              const std::string& dir, int jobs, bool svg) {
  const auto base = with_overrides(load_config(cfg), split_sets(sets));
  const auto rows = expand_grid(parse_grid(grid));
  std::vector<ScenarioConfig> configs;
  for (const auto& row : rows) configs.push_back(with_overrides(base, row));

  std::vector<RunOutcome> outcomes(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu", i);
      try {
        outcomes[i] = run_into(configs[i], fs::path(dir) / name, svg);
      } catch (const ConfigError& e) {
        outcomes[i] = {kConfig, config_failure(e)};
      } catch (const std::exception& e) {
        outcomes[i] = {kRuntime, {{"error", "runtime"}, {"message", e.what()}}};
      }
      for (const auto& [k, v] : rows[i]) outcomes[i].summary["grid"][k] = v;
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, configs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json runs = json::array();
  int code = kPass;
  for (const auto& o : outcomes) {
    runs.push_back(o.summary);
    code = std::max(code, o.code);
  }
  const json summary{{"runs", runs}, {"exit_code", code}};
  fs::create_directories(dir);
  write_text((fs::path(dir) / "sweep.json").string(), summary.dump(2));
  std::cout << summary.dump(2) << '\n';
  return code;
}

int cmd_check(const std::string& cfg, const std::vector<std::string>& sets) {
  const auto config = with_overrides(load_config(cfg), split_sets(sets));
  const auto c = check_thresholds(config);
  json j = json::parse(threshold_json(c.report));
  j["mode_j"] = c.mode_j;
  j["max_compliant_amplitude"] = c.max_compliant_amplitude;
  std::cout << j.dump(2) << '\n';
  return c.report.hypotheses_met ? kPass : kAssertion;
}

int cmd_report(const std::string& dir) {
  const json meta = json::parse(read_text((fs::path(dir) / "meta.json").string()));
  const auto config = parse_config(meta.at("config").get<std::string>());
  const Series series = read_series((fs::path(dir) / "series.csv").string());
  // Hypotheses depend only on frame 0 and the config, so they are recomputed.
  const ThresholdReport th = threshold_report(gen_initial(config), config.cone(), config.flow);
  RunStatus status = RunStatus::completed;
  for (auto s : {RunStatus::tip_collision, RunStatus::stepper_failure, RunStatus::degenerate})
    if (meta.value("status", "") == to_string(s)) status = s;
  const RunReport report = evaluate_run(config, series, status, th);
  std::cout << report_json(report) << '\n';
  for (const auto& c : report.checks)
    std::cerr << (c.passed ? "PASS " : (c.asserted ? "FAIL " : "info ")) << c.name << '\n';
  return report.passed() ? kPass : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic flows of open curves in a cone"};
  app.require_subcommand(1);

  std::string cfg, out_dir = "out", in_dir, grid;
  std::vector<std::string> sets;
  bool svg = false;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run_cmd = app.add_subcommand("run", "integrate one config");
  run_cmd->add_option("-c,--config", cfg, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--out", out_dir, "output directory");
  run_cmd->add_option("--set", sets, "key=value override");
  run_cmd->add_flag("--svg", svg, "write SVG frames");

  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of configs in parallel");
  sweep_cmd->add_option("-c,--config", cfg, "base config file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--grid", grid, "axes like 'init.r0=1,2;grid.N=32,64'")->required();
  sweep_cmd->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("-o,--out", out_dir, "output directory");
  sweep_cmd->add_option("--set", sets, "key=value override");
  sweep_cmd->add_flag("--svg", svg, "write SVG frames");

  auto* check_cmd = app.add_subcommand("check", "print the threshold report");
  check_cmd->add_option("-c,--config", cfg, "config file")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--set", sets, "key=value override");

  auto* report_cmd = app.add_subcommand("report", "evaluate a finished run directory");
  report_cmd->add_option("-i,--in", in_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(cfg, sets, out_dir, svg);
    if (*sweep_cmd) return cmd_sweep(cfg, grid, sets, out_dir, jobs, svg);
    if (*check_cmd) return cmd_check(cfg, sets);
    return cmd_report(in_dir);
  } catch (const ConfigError& e) {
    std::cout << config_failure(e).dump(2) << '\n';
    return kConfig;
  } catch (const SchemaError& e) {
    std::cout << json{{"error", "schema"}, {"message", e.what()}}.dump(2) << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cout << json{{"error", "runtime"}, {"message", e.what()}}.dump(2) << '\n';
    return kRuntime;
  }
}
