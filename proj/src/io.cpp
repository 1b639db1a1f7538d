#include "coneflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coneflow/error.hpp"

namespace coneflow {

namespace {


struct Column {
  const char* name;
  double (*get)(const DiagnosticsFrame&);
  void (*set)(DiagnosticsFrame&, double);
};

#define CF_COL(name, expr)                                                   \
  Column {                                                                   \
    name, [](const DiagnosticsFrame& f) { return f.expr; },                  \
        [](DiagnosticsFrame& f, double v) { f.expr = v; }                    \
  }

const std::vector<Column>& columns() {
  static const std::vector<Column> cols{
      CF_COL("t", t),
      CF_COL("L", L),
      CF_COL("A", A),
      CF_COL("E0", E0),
      CF_COL("E_lambda", E_lambda),
      CF_COL("ks2", ks2),
      CF_COL("ks2_l0", ks2_l[0]),
      CF_COL("ks2_l1", ks2_l[1]),
      CF_COL("ks2_l2", ks2_l[2]),
      CF_COL("ks2_l3", ks2_l[3]),
      CF_COL("epsilon", epsilon),
      CF_COL("gamma", gamma),
      CF_COL("kbar", kbar),
      CF_COL("omega_num", omega_num),
      CF_COL("omega_free", omega_free),
      CF_COL("lambda_used", lambda_used),
      CF_COL("neumann_minus", residuals.neumann_minus),
      CF_COL("neumann_plus", residuals.neumann_plus),
      CF_COL("flux_minus", residuals.flux_minus),
      CF_COL("flux_plus", residuals.flux_plus),
      CF_COL("on_ray_minus", residuals.on_ray_minus),
      CF_COL("on_ray_plus", residuals.on_ray_plus),
      CF_COL("tip_dist", tip_dist),
      CF_COL("kmax_dev", kmax_dev),
      CF_COL("rescaled_dev", rescaled_dev),
  };
  return cols;
}

#undef CF_COL

void append_real(std::string& out, double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

double read_real(const std::string& cell, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw SchemaError("line " + std::to_string(line) + ": bad number '" + cell + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

nlohmann::json real(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

const std::vector<std::string>& series_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.emplace_back(c.name);
    return n;
  }();
  return names;
}

std::vector<double> frame_values(const DiagnosticsFrame& frame) {
  std::vector<double> out;
  out.reserve(columns().size());
  for (const auto& c : columns()) out.push_back(c.get(frame));
  return out;
}

std::string series_to_csv(const Series& series) {
  std::string out = "# coneflow-series v" + std::to_string(kSeriesSchemaVersion) + "\n";
  out += "# config_hash=" + series.config_hash + " engine_version=" + series.engine_version + "\n";
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i].name;
  }
  out += '\n';
  for (const auto& f : series.frames) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ',';
      append_real(out, cols[i].get(f));
    }
    out += '\n';
  }
  return out;
}

Series series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  const std::string magic = "# coneflow-series v";
  if (!std::getline(in, line) || line.rfind(magic, 0) != 0)
    throw SchemaError("not a coneflow series file");
  if (line.substr(magic.size()) != std::to_string(kSeriesSchemaVersion))
    throw SchemaError("series schema v" + line.substr(magic.size()) + " is incompatible with v" +
                      std::to_string(kSeriesSchemaVersion));

  Series series;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ", 0) != 0) break;
    std::istringstream meta(line.substr(2));
    std::string kv;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      if (kv.compare(0, eq, "config_hash") == 0) series.config_hash = kv.substr(eq + 1);
      if (kv.compare(0, eq, "engine_version") == 0) series.engine_version = kv.substr(eq + 1);
    }
  }
  if (split(line, ',') != series_columns()) throw SchemaError("series header does not match v1 columns");

  const auto& cols = columns();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != cols.size())
      throw SchemaError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(cols.size()) + " columns");
    DiagnosticsFrame f;
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i].set(f, read_real(cells[i], lineno));
    if (!series.frames.empty() && !(f.t > series.frames.back().t))
      throw SchemaError("line " + std::to_string(lineno) + ": t must be strictly increasing");
    series.frames.push_back(f);
  }
  return series;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_series(const Series& series, const std::string& path) {
  write_text(path, series_to_csv(series));
}

Series read_series(const std::string& path) { return series_from_csv(read_text(path)); }

std::string threshold_json(const ThresholdReport& r) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["omega"] = real(r.omega);
  j["omega_bound_penalised"] = real(r.omega_bound_penalised);
  j["omega_bound_constrained"] = real(r.omega_bound_constrained);
  j["L0"] = real(r.L0);
  j["E_lambda_0"] = real(r.E_lambda_0);
  j["L_lower"] = real(r.L_lower);
  j["L_upper"] = real(r.L_upper);
  j["smallness_penalised"] = real(r.smallness_penalised);
  j["smallness_penalised_quadratic"] = real(r.smallness_penalised_quadratic);
  j["smallness_constrained"] = real(r.smallness_constrained);
  j["epsilon_star"] = real(r.epsilon_star);
  j["ks2_0"] = real(r.ks2_0);
  j["epsilon_0"] = real(r.epsilon_0);
  j["flags"] = {{"penalised", r.flags.penalised},
                {"constrained", r.flags.constrained},
                {"free", r.flags.free}};
  j["hypotheses_met"] = r.hypotheses_met;
  return j.dump(2);
}

std::string metadata_json(const ScenarioConfig& config, const RunResult& result) {
  nlohmann::json j;
  j["engine_version"] = kEngineVersion;
  j["schema_version"] = kSeriesSchemaVersion;
  j["config_hash"] = config_hash(config);
  j["config"] = config_to_text(config);
  j["thresholds"] = nlohmann::json::parse(threshold_json(result.thresholds));
  j["status"] = to_string(result.status);
  j["message"] = result.message;
  j["steps"] = result.steps;
  j["frames"] = result.series.frames.size();
  j["wall_seconds"] = result.wall_seconds;
  return j.dump(2);
}

}  // namespace coneflow
