#include "coneflow/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "coneflow/error.hpp"

namespace coneflow {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_plain(std::string_view s) {
  s = std::string_view(s.data(), s.size());
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Accepts plain numbers and multiples of pi: "1.5", "0.65*pi", "0.65pi", "pi", "pi/2".
std::optional<double> parse_real(const std::string& text) {
  const std::string t = trim(text);
  constexpr double pi = std::numbers::pi;
  if (t == "pi") return pi;
  if (t.rfind("pi/", 0) == 0) {
    const auto d = parse_plain(std::string_view(t).substr(3));
    if (!d || *d == 0.0) return std::nullopt;
    return pi / *d;
  }
  if (t.size() > 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    std::string head = t.substr(0, t.size() - 2);
    if (!head.empty() && head.back() == '*') head.pop_back();
    const auto m = parse_plain(trim(head));
    if (!m) return std::nullopt;
    return *m * pi;
  }
  return parse_plain(t);
}

std::optional<long long> parse_integer(const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  return std::nullopt;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_string(StepperKind k) {
  return k == StepperKind::semi_implicit ? "semi_implicit" : "explicit";
}

std::string to_string(ReferenceArc r) {
  switch (r) {
    case ReferenceArc::automatic: return "auto";
    case ReferenceArc::none: return "none";
    case ReferenceArc::stationary: return "stationary";
    case ReferenceArc::fixed_length: return "fixed_length";
    case ReferenceArc::self_similar: return "self_similar";
  }
  return "auto";
}

using Issues = std::vector<ConfigIssue>;
using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&, Issues&)>;

Setter real_field(double ScenarioConfig::*member) {
  return [member](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
    if (auto x = parse_real(v)) c.*member = *x;
    else out.push_back({key, "expected a real number"});
  };
}

Setter option_real(double StepperOptions::*member) {
  return [member](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
    if (auto x = parse_real(v)) c.options.*member = *x;
    else out.push_back({key, "expected a real number"});
  };
}

Setter option_int(int StepperOptions::*member) {
  return [member](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
    if (auto x = parse_integer(v)) c.options.*member = static_cast<int>(*x);
    else out.push_back({key, "expected an integer"});
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["cone.theta1"] = real_field(&ScenarioConfig::theta1);
    m["cone.theta2"] = real_field(&ScenarioConfig::theta2);
    m["flow.mode"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      try {
        c.flow.mode = parse_flow_mode(trim(v));
      } catch (const InvalidInput&) {
        out.push_back({key, "must be one of penalised, constrained, free"});
      }
    };
    m["flow.lambda"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      if (auto x = parse_real(v)) c.flow.lambda = *x;
      else out.push_back({key, "expected a real number"});
    };
    m["init.r0"] = real_field(&ScenarioConfig::r0);
    m["init.modes"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      c.modes.clear();
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        const auto j = colon == std::string::npos ? std::nullopt : parse_integer(item.substr(0, colon));
        const auto a = colon == std::string::npos ? std::nullopt : parse_real(item.substr(colon + 1));
        if (!j || !a) {
          out.push_back({key, "expected a list of j:amplitude pairs"});
          return;
        }
        c.modes.push_back({static_cast<int>(*j), *a});
      }
    };
    m["init.seed"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      const auto x = parse_integer(v);
      if (x && *x >= 0) c.seed = static_cast<std::uint64_t>(*x);
      else out.push_back({key, "expected a non-negative integer"});
    };
    m["init.random_modes"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      if (auto x = parse_integer(v)) c.random_modes = static_cast<int>(*x);
      else out.push_back({key, "expected an integer"});
    };
    m["init.random_amplitude"] = real_field(&ScenarioConfig::random_amplitude);
    m["grid.N"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      if (auto x = parse_integer(v)) c.N = static_cast<int>(*x);
      else out.push_back({key, "expected an integer"});
    };
    m["time.t_end"] = real_field(&ScenarioConfig::t_end);
    m["time.output_every"] = real_field(&ScenarioConfig::output_every);
    m["time.dense_until"] = real_field(&ScenarioConfig::dense_until);
    m["time.dense_every"] = real_field(&ScenarioConfig::dense_every);
    m["stepper.kind"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      const std::string t = trim(v);
      if (t == "semi_implicit") c.stepper = StepperKind::semi_implicit;
      else if (t == "explicit") c.stepper = StepperKind::explicit_rk4;
      else out.push_back({key, "must be semi_implicit or explicit"});
    };
    m["stepper.sigma"] = option_real(&StepperOptions::sigma_explicit);
    m["stepper.sigma2"] = option_real(&StepperOptions::sigma_implicit);
    m["stepper.dt"] = option_real(&StepperOptions::dt);
    m["stepper.resample_every"] = option_int(&StepperOptions::resample_every);
    m["stepper.max_rejections"] = option_int(&StepperOptions::max_rejections);
    m["stepper.regrow_after"] = option_int(&StepperOptions::regrow_after);
    m["tol.on_ray"] = option_real(&StepperOptions::on_ray_tol);
    m["tol.neumann"] = option_real(&StepperOptions::neumann_tol);
    m["tol.energy"] = option_real(&StepperOptions::energy_tol);
    m["tol.tip"] = option_real(&StepperOptions::tip_fraction);
    m["tol.psw"] = real_field(&ScenarioConfig::psw_tol);
    m["output.svg"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      if (auto b = parse_bool(v)) c.svg = *b;
      else out.push_back({key, "expected true or false"});
    };
    m["output.reference"] = [](ScenarioConfig& c, const std::string& key, const std::string& v, Issues& out) {
      static const std::map<std::string, ReferenceArc> names{
          {"auto", ReferenceArc::automatic},         {"none", ReferenceArc::none},
          {"stationary", ReferenceArc::stationary},  {"fixed_length", ReferenceArc::fixed_length},
          {"self_similar", ReferenceArc::self_similar}};
      const auto it = names.find(trim(v));
      if (it != names.end()) c.reference = it->second;
      else out.push_back({key, "must be auto, none, stationary, fixed_length or self_similar"});
    };
    return m;
  }();
  return table;
}

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys{"cone.theta1", "cone.theta2", "flow.mode",
                                             "init.r0",     "grid.N",      "time.t_end"};
  return keys;
}

void validate_config(const ScenarioConfig& c, const std::set<std::string>& present, Issues& out) {
  try {
    Cone(c.theta1, c.theta2);
  } catch (const InvalidInput&) {
    out.push_back({"cone.theta2", "cone invariant 0 <= theta2 < theta1 < 2*pi violated"});
  }
  if (c.flow.mode == FlowMode::penalised && !(c.flow.lambda > 0.0))
    out.push_back({"flow.lambda", "penalised flow requires lambda > 0 (rule: for any constant lambda > 0)"});
  if (c.flow.mode != FlowMode::penalised && present.count("flow.lambda") && c.flow.lambda != 0.0)
    out.push_back({"flow.lambda", "lambda is only used in penalised mode"});
  if (!(c.r0 > 0.0)) out.push_back({"init.r0", "must be > 0"});
  for (const auto& m : c.modes) {
    if (m.j < 1) out.push_back({"init.modes", "mode index j must be >= 1"});
    if (!(std::abs(m.amplitude) < 0.2)) out.push_back({"init.modes", "amplitudes must satisfy |a_j| < 0.2"});
  }
  if (c.random_modes < 0 || c.random_modes > 64)
    out.push_back({"init.random_modes", "must lie in 0..64"});
  if (!(c.random_amplitude >= 0.0 && c.random_amplitude < 0.2))
    out.push_back({"init.random_amplitude", "must lie in [0, 0.2)"});
  if (c.N < DiscreteCurve::kMinSegments) out.push_back({"grid.N", "must be >= 8"});
  if (!(c.t_end > 0.0)) out.push_back({"time.t_end", "must be > 0"});
  if (present.count("time.output_every") && !(c.output_every > 0.0))
    out.push_back({"time.output_every", "must be > 0"});
  if (!(c.dense_until >= 0.0)) out.push_back({"time.dense_until", "must be >= 0"});
  if (c.dense_until > 0.0 && !(c.dense_every > 0.0))
    out.push_back({"time.dense_every", "must be > 0 when time.dense_until is set"});
  if (!(c.dense_every >= 0.0)) out.push_back({"time.dense_every", "must be >= 0"});
  const auto& o = c.options;
  if (!(o.sigma_explicit > 0.0)) out.push_back({"stepper.sigma", "must be > 0"});
  if (!(o.sigma_implicit > 0.0)) out.push_back({"stepper.sigma2", "must be > 0"});
  if (!(o.dt >= 0.0)) out.push_back({"stepper.dt", "must be >= 0 (0 selects the default)"});
  if (o.resample_every < 0) out.push_back({"stepper.resample_every", "must be >= 0"});
  if (o.max_rejections < 0) out.push_back({"stepper.max_rejections", "must be >= 0"});
  if (o.regrow_after < 1) out.push_back({"stepper.regrow_after", "must be >= 1"});
  if (!(o.on_ray_tol > 0.0)) out.push_back({"tol.on_ray", "must be > 0"});
  if (!(o.neumann_tol > 0.0)) out.push_back({"tol.neumann", "must be > 0"});
  if (!(o.energy_tol > 0.0)) out.push_back({"tol.energy", "must be > 0"});
  if (!(o.tip_fraction > 0.0)) out.push_back({"tol.tip", "must be > 0"});
  if (!(c.psw_tol > 0.0)) out.push_back({"tol.psw", "must be > 0"});
}

ScenarioConfig apply_pairs(ScenarioConfig c, std::set<std::string> present,
                           const std::vector<std::pair<std::string, std::string>>& kv,
                           Issues issues, bool check_required) {
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    const auto it = table.find(key);
    if (it == table.end()) {
      issues.push_back({key, "unknown key (strict mode)"});
      continue;
    }
    it->second(c, key, value, issues);
    present.insert(key);
  }
  if (check_required)
    for (const auto& k : required_keys())
      if (!present.count(k)) issues.push_back({k, "required key missing"});
  if (issues.empty()) validate_config(c, present, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

DiscreteCurve polar_curve(const ScenarioConfig& c, const std::vector<PerturbationMode>& modes) {
  const Cone cone = c.cone();
  const int n = c.N;
  std::vector<Point2> nodes(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double th = cone.theta1() - cone.opening() * i / n;
    const double s = (th - cone.theta2()) / cone.opening();
    double rho = 1.0;
    for (const auto& m : modes) rho += m.amplitude * std::cos(m.j * std::numbers::pi * s);
    rho *= c.r0;
    if (!(rho > 0.0)) throw ConfigError("init.modes", "perturbed radius must stay positive");
    nodes[static_cast<std::size_t>(i)] = {rho * std::cos(th), rho * std::sin(th)};
  }
  return DiscreteCurve(std::move(nodes));
}

}  // namespace

std::vector<double> ScenarioConfig::output_times() const {
  std::vector<double> out;
  auto add_grid = [&](double start, double end, double every) {
    const long n = std::max(1L, static_cast<long>(std::ceil((end - start) / every - 1e-9)));
    for (long k = 1; k <= n; ++k) {
      const double t = std::min(end, start + static_cast<double>(k) * every);
      if (out.empty() || t > out.back()) out.push_back(t);
    }
  };
  const double dense = std::min(dense_until, t_end);
  if (dense > 0.0 && dense_every > 0.0) add_grid(0.0, dense, dense_every);
  add_grid(out.empty() ? 0.0 : out.back(), t_end, output_interval());
  return out;
}

ScenarioConfig parse_config(const std::string& text) {
  Issues issues;
  std::vector<std::pair<std::string, std::string>> kv;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({"line " + std::to_string(lineno), "expected key = value"});
      continue;
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (!seen.insert(key).second) {
      issues.push_back({key, "duplicate key"});
      continue;
    }
    kv.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return apply_pairs(ScenarioConfig{}, {}, kv, std::move(issues), true);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ScenarioConfig with_overrides(const ScenarioConfig& base,
                              const std::vector<std::pair<std::string, std::string>>& kv) {
  std::set<std::string> present(required_keys().begin(), required_keys().end());
  if (base.output_every > 0.0) present.insert("time.output_every");
  return apply_pairs(base, present, kv, {}, false);
}

std::string config_to_text(const ScenarioConfig& c) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& v) { out << key << " = " << v << '\n'; };
  kv("cone.theta1", format_real(c.theta1));
  kv("cone.theta2", format_real(c.theta2));
  kv("flow.mode", to_string(c.flow.mode));
  if (c.flow.mode == FlowMode::penalised) kv("flow.lambda", format_real(c.flow.lambda));
  kv("init.r0", format_real(c.r0));
  std::string modes;
  for (const auto& m : c.modes) {
    if (!modes.empty()) modes += ", ";
    modes += std::to_string(m.j) + ":" + format_real(m.amplitude);
  }
  kv("init.modes", modes);
  kv("init.seed", std::to_string(c.seed));
  kv("init.random_modes", std::to_string(c.random_modes));
  kv("init.random_amplitude", format_real(c.random_amplitude));
  kv("grid.N", std::to_string(c.N));
  kv("time.t_end", format_real(c.t_end));
  if (c.output_every > 0.0) kv("time.output_every", format_real(c.output_every));
  if (c.dense_until > 0.0) {
    kv("time.dense_until", format_real(c.dense_until));
    kv("time.dense_every", format_real(c.dense_every));
  }
  kv("stepper.kind", to_string(c.stepper));
  const auto& o = c.options;
  kv("stepper.sigma", format_real(o.sigma_explicit));
  kv("stepper.sigma2", format_real(o.sigma_implicit));
  kv("stepper.dt", format_real(o.dt));
  kv("stepper.resample_every", std::to_string(o.resample_every));
  kv("stepper.max_rejections", std::to_string(o.max_rejections));
  kv("stepper.regrow_after", std::to_string(o.regrow_after));
  kv("tol.on_ray", format_real(o.on_ray_tol));
  kv("tol.neumann", format_real(o.neumann_tol));
  kv("tol.energy", format_real(o.energy_tol));
  kv("tol.tip", format_real(o.tip_fraction));
  kv("tol.psw", format_real(c.psw_tol));
  kv("output.svg", c.svg ? "true" : "false");
  kv("output.reference", to_string(c.reference));
  return out.str();
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<PerturbationMode> all_modes(const ScenarioConfig& c) {
  std::map<int, double> sum;
  for (const auto& m : c.modes) sum[m.j] += m.amplitude;
  if (c.random_modes > 0 && c.random_amplitude > 0.0) {
    std::mt19937_64 rng(c.seed);
    for (int j = 1; j <= c.random_modes; ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      sum[j] += (2.0 * u - 1.0) * c.random_amplitude;
    }
  }
  std::vector<PerturbationMode> out;
  for (const auto& [j, a] : sum) out.push_back({j, a});
  return out;
}

DiscreteCurve gen_initial(const ScenarioConfig& c) {
  const Cone cone = c.cone();
  const auto modes = all_modes(c);
  const bool flat = std::all_of(modes.begin(), modes.end(),
                                [](const PerturbationMode& m) { return m.amplitude == 0.0; });

  std::vector<Point2> nodes;
  try {
    if (flat) {
      nodes = centred_arc(cone, c.r0, c.N).nodes();
    } else {
      nodes = resample_uniform(polar_curve(c, modes), c.N).nodes();
      nodes.front() = project_to_ray(nodes.front(), cone, Side::minus);
      nodes.back() = project_to_ray(nodes.back(), cone, Side::plus);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("init.modes", std::string("generated curve is not admissible: ") + e.what());
  }
  DiscreteCurve curve(std::move(nodes));
  if (tip_distance(curve) < c.options.tip_fraction * arc_length(curve))
    throw ConfigError("init.r0", "generated curve starts inside the tip margin");
  return curve;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::tip_collision: return "tip_collision";
    case RunStatus::stepper_failure: return "stepper_failure";
    case RunStatus::degenerate: return "degenerate_curvature";
  }
  return "completed";
}

RunResult run(const ScenarioConfig& config, const FrameObserver& observer) {
  const auto wall0 = std::chrono::steady_clock::now();
  const Cone cone = config.cone();
  RunResult result;
  result.series.config_hash = config_hash(config);
  result.series.engine_version = kEngineVersion;

  const DiscreteCurve initial = gen_initial(config);
  result.thresholds = threshold_report(initial, cone, config.flow);
  FlowState state = make_state(initial, cone, config.flow, config.options);

  auto record = [&](const FlowState& s) {
    auto frame = make_frame(s.curve, cone, config.flow, s.time);
    if (observer) observer(s, frame, result.series.frames.size());
    result.series.frames.push_back(frame);
  };

  try {
    record(state);
    for (const double target : config.output_times()) {
      while (state.time < target * (1.0 - 1e-13)) {
        const double remaining = target - state.time;
        if (config.stepper == StepperKind::semi_implicit) {
          auto [next, report] = step(state, std::min(state.dt_current, remaining), config.options);
          state = std::move(next);
        } else {
          const double dt = std::min(stability_dt(state, config.options.sigma_explicit), remaining);
          auto [next, report] = step_explicit(state, dt, config.options);
          state = std::move(next);
        }
        ++result.steps;
      }
      state.time = target;
      record(state);
    }
  } catch (const TipCollision& e) {
    result.status = RunStatus::tip_collision;
    result.message = e.what();
  } catch (const StepperFailure& e) {
    result.status = RunStatus::stepper_failure;
    result.message = e.what();
  } catch (const DegenerateCurvature& e) {
    result.status = RunStatus::degenerate;
    result.message = e.what();
  }
  result.final_state = std::move(state);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return result;
}

ThresholdCheck check_thresholds(const ScenarioConfig& config) {
  ThresholdCheck out;
  const Cone cone = config.cone();
  out.report = threshold_report(gen_initial(config), cone, config.flow);
  out.mode_j = config.modes.empty() ? 2 : config.modes.front().j;

  ScenarioConfig probe = config;
  probe.random_modes = 0;
  auto met = [&](double a) {
    probe.modes = {{out.mode_j, a}};
    try {
      return threshold_report(gen_initial(probe), cone, config.flow).hypotheses_met;
    } catch (const ConfigError&) {
      return false;
    }
  };
  if (!met(0.0)) return out;
  double lo = 0.0, hi = 0.2 * (1.0 - 1e-12);
  if (met(hi)) {
    out.max_compliant_amplitude = hi;
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (met(mid) ? lo : hi) = mid;
  }
  out.max_compliant_amplitude = lo;
  return out;
}

double reference_radius(const ScenarioConfig& config, double L0, double t) {
  const double omega = config.cone().omega();
  const double fixed = L0 / (2.0 * std::numbers::pi * omega);
  ReferenceArc kind = config.reference;
  if (kind == ReferenceArc::automatic) {
    switch (config.flow.mode) {
      case FlowMode::penalised: kind = ReferenceArc::stationary; break;
      case FlowMode::constrained: kind = ReferenceArc::fixed_length; break;
      case FlowMode::free: kind = ReferenceArc::self_similar; break;
    }
  }
  switch (kind) {
    case ReferenceArc::stationary:
      return config.flow.lambda > 0.0 ? 1.0 / std::sqrt(2.0 * config.flow.lambda) : 0.0;
    case ReferenceArc::fixed_length: return fixed;
    case ReferenceArc::self_similar: return std::pow(std::pow(fixed, 4.0) + 2.0 * t, 0.25);
    default: return 0.0;
  }
}

}  // namespace coneflow
