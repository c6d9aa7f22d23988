#pragma once

#include <string>
#include <vector>

#include "markovcp/harness.hpp"

namespace markovcp::io {

struct SeriesRow {
  std::string timestamp;
  double value;
};

// Rows of a `t,value` CSV file in file order.
struct SeriesFile {
  std::vector<SeriesRow> rows;

  std::vector<double> values() const;
};

// Parses a CSV file with the exact header `t,value`. Non-numeric values
// raise ParseError with the 1-based line number; a wrong header raises
// BadHeader; a missing file raises IoError.
SeriesFile load_series_csv(const std::string& path);

void write_series_csv(const SeriesFile& series, const std::string& path);

enum class ReportFormat { json, csv };

// Accepts "json" or "csv"; anything else raises UnsupportedFormat.
ReportFormat report_format_from_string(const std::string& name);

// JSON report: one object keyed by method name, each value carrying exactly
// coverage_mean, coverage_se, mean_halfwidth, relative_length_error, k_used,
// trials, infinite_intervals.
std::string report_to_json(const harness::CoverageReport& report);

// CSV report: header
// method,coverage_mean,coverage_se,mean_halfwidth,relative_length_error,k_used,trials,infinite_intervals
// and one row per method.
std::string report_to_csv(const harness::CoverageReport& report);

void write_report(const harness::CoverageReport& report, const std::string& path,
                  ReportFormat format);

struct PlotRow {
  double x;
  std::string method;
  std::string metric;
  double value;
};

// Long-format plot data `x,method,metric,value`, rows sorted by
// (x, method, metric).
std::string plot_data_csv(std::vector<PlotRow> rows);

void emit_plot_data(std::vector<PlotRow> rows, const std::string& path);

// Parses an experiment configuration from JSON. Field names mirror the
// config structure exactly; unknown keys are a hard error.
harness::ExperimentConfig parse_experiment_config(const std::string& json_text);

harness::ExperimentConfig load_experiment_config(const std::string& path);

// Shortest round-trip decimal rendering of a double (locale-independent).
std::string format_double(double value);

}  // namespace markovcp::io
