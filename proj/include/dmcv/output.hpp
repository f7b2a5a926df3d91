#pragma once

#include <string>
#include <vector>

#include "dmcv/pipeline.hpp"

namespace dmcv {

// Fixed CSV column order; documented in the README and embedded in the run
// manifest. RFC-4180 quoting, LF line endings, shortest round-trip floats.
const std::vector<std::string>& csv_columns();

std::string reports_to_csv(const std::vector<KeyRateReport>& reports);
std::string csv_header_line();
std::string report_to_csv_row(const KeyRateReport& rep);

// Inverse of reports_to_csv for the persisted schema; unknown headers are
// errors, so stale files fail loudly.
std::vector<KeyRateReport> parse_reports_csv(const std::string& csv);

// JSON document recording the artifact version, the command, the fully
// resolved configuration (every applied default), the CSV schema, and the
// emitted files.
std::string run_manifest_json(const ScenarioConfig& resolved, const std::string& command,
                              const std::vector<std::string>& outputs);

// Static log-y scatter/line plot of expected and secure rate against one
// numeric column (e.g. "N" or "L_km"); points with nonpositive rate are drawn
// on the floor line.
std::string sweep_plot_svg(const std::vector<KeyRateReport>& reports,
                           const std::string& x_column);

// Numeric value of one schema column; used by the plot and the CSV writer.
double report_field(const KeyRateReport& rep, const std::string& column);

void write_text_file(const std::string& path, const std::string& content);

} // namespace dmcv
