#pragma once

#include <string>
#include <vector>

#include "coneflow/diagnostics.hpp"
#include "coneflow/scenario.hpp"

namespace coneflow {

inline constexpr int kSeriesSchemaVersion = 1;

// Column names in file order, one per scalar of DiagnosticsFrame.
const std::vector<std::string>& series_columns();

// Frame scalars in series_columns() order.
std::vector<double> frame_values(const DiagnosticsFrame& frame);

// CSV with a "# coneflow-series v<schema>" line, a metadata comment and a header row.
// Reals use the shortest round-trip decimal form, so read_series(write_series(s)) == s
// bit for bit. Throws IoError.
void write_series(const Series& series, const std::string& path);
std::string series_to_csv(const Series& series);

// Throws IoError when unreadable and SchemaError on version or column mismatch.
Series read_series(const std::string& path);
Series series_from_csv(const std::string& text);

// JSON sidecar: config echo, engine version, hash, threshold report, run status.
std::string metadata_json(const ScenarioConfig& config, const RunResult& result);
std::string threshold_json(const ThresholdReport& report);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace coneflow
