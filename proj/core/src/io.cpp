#include "markovcp/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "markovcp/errors.hpp"

namespace markovcp::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_known_keys(const json& object, std::initializer_list<const char*> allowed,
                      const char* context) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; }) == allowed.end())
      throw InvalidParameter(std::string("unknown key '") + key + "' in " + context);
  }
}

json require_key(const json& object, const char* key, const char* context) {
  auto it = object.find(key);
  if (it == object.end())
    throw InvalidParameter(std::string("missing key '") + key + "' in " + context);
  return *it;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
  return out;
}

ordered_json method_report_json(const harness::MethodReport& report) {
  ordered_json entry;
  entry["coverage_mean"] = report.coverage_mean;
  entry["coverage_se"] = report.coverage_se;
  if (std::isfinite(report.mean_halfwidth))
    entry["mean_halfwidth"] = report.mean_halfwidth;
  else
    entry["mean_halfwidth"] = nullptr;
  if (std::isfinite(report.relative_length_error))
    entry["relative_length_error"] = report.relative_length_error;
  else
    entry["relative_length_error"] = nullptr;
  entry["k_used"] = report.k_used;
  entry["trials"] = report.trials;
  entry["infinite_intervals"] = report.infinite_intervals;
  return entry;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::vector<double> SeriesFile::values() const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i].value;
  return out;
}

SeriesFile load_series_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "': " + std::strerror(errno));

  std::string line;
  if (!std::getline(in, line)) throw BadHeader("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value")
    throw BadHeader("expected header 't,value', got '" + line + "' in " + path);

  SeriesFile series;
  long line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("missing comma", line_number);
    const std::string timestamp = line.substr(0, comma);
    const std::string value_text = line.substr(comma + 1);
    double value = 0.0;
    const char* begin = value_text.data();
    const char* end = begin + value_text.size();
    const auto parsed = std::from_chars(begin, end, value);
    if (parsed.ec != std::errc() || parsed.ptr != end)
      throw ParseError("cannot parse value '" + value_text + "'", line_number);
    if (!std::isfinite(value)) throw ParseError("value is not finite", line_number);
    series.rows.push_back(SeriesRow{timestamp, value});
  }
  return series;
}

void write_series_csv(const SeriesFile& series, const std::string& path) {
  auto out = open_for_write(path);
  out << "t,value\n";
  for (const auto& row : series.rows) out << row.timestamp << ',' << format_double(row.value) << '\n';
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw UnsupportedFormat("unsupported report format '" + name + "' (expected json or csv)");
}

std::string report_to_json(const harness::CoverageReport& report) {
  ordered_json root;
  for (const auto& [method, method_report] : report.methods)
    root[harness::to_string(method)] = method_report_json(method_report);
  return root.dump(2) + "\n";
}

std::string report_to_csv(const harness::CoverageReport& report) {
  std::ostringstream out;
  out << "method,coverage_mean,coverage_se,mean_halfwidth,relative_length_error,k_used,trials,"
         "infinite_intervals\n";
  for (const auto& [method, r] : report.methods) {
    out << harness::to_string(method) << ',' << format_double(r.coverage_mean) << ','
        << format_double(r.coverage_se) << ',' << format_double(r.mean_halfwidth) << ','
        << format_double(r.relative_length_error) << ',' << r.k_used << ',' << r.trials << ','
        << r.infinite_intervals << '\n';
  }
  return out.str();
}

void write_report(const harness::CoverageReport& report, const std::string& path,
                  ReportFormat format) {
  auto out = open_for_write(path);
  out << (format == ReportFormat::json ? report_to_json(report) : report_to_csv(report));
  if (!out) throw IoError("failed writing '" + path + "': " + std::strerror(errno));
}

std::string plot_data_csv(std::vector<PlotRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const PlotRow& a, const PlotRow& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.method != b.method) return a.method < b.method;
    return a.metric < b.metric;
  });
  std::ostringstream out;
  out << "x,method,metric,value\n";
  for (const auto& row : rows)
    out << format_double(row.x) << ',' << row.method << ',' << row.metric << ','
        << format_double(row.value) << '\n';
  return out.str();
}

void emit_plot_data(std::vector<PlotRow> rows, const std::string& path) {
  auto out = open_for_write(path);
  out << plot_data_csv(std::move(rows));
  if (!out) throw IoError("failed writing '" + path + "': " + std::strerror(errno));
}

harness::ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidParameter(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InvalidParameter("config root must be a JSON object");
  check_known_keys(root,
                   {"chain", "N_train", "n_cal", "alpha", "methods", "k_policy", "trials",
                    "master_seed"},
                   "config");

  harness::ExperimentConfig config;
  if (root.contains("chain")) {
    const json chain = root["chain"];
    if (!chain.is_object()) throw InvalidParameter("'chain' must be an object");
    const std::string type = require_key(chain, "type", "chain").get<std::string>();
    if (type == "lazy-walk") {
      check_known_keys(chain, {"type", "w", "a", "noise"}, "lazy-walk chain");
      harness::LazyWalkChain lazy;
      if (chain.contains("w")) lazy.w = chain["w"].get<std::size_t>();
      if (chain.contains("a")) lazy.slope = chain["a"].get<double>();
      if (chain.contains("noise")) lazy.noise_sigma = chain["noise"].get<double>();
      if (lazy.noise_sigma < 0.0) throw InvalidParameter("'noise' must be nonnegative");
      config.chain = lazy;
    } else if (type == "ar1") {
      check_known_keys(chain, {"type", "theta", "omega"}, "ar1 chain");
      harness::Ar1Chain ar;
      if (chain.contains("theta")) ar.theta = chain["theta"].get<double>();
      if (chain.contains("omega")) ar.omega = chain["omega"].get<double>();
      config.chain = ar;
    } else {
      throw InvalidParameter("unknown chain type '" + type + "'");
    }
  }
  if (root.contains("N_train")) config.train_size = root["N_train"].get<long>();
  if (root.contains("n_cal")) config.calib_size = root["n_cal"].get<long>();
  if (root.contains("alpha")) config.alpha = root["alpha"].get<double>();
  if (root.contains("trials")) config.trials = root["trials"].get<long>();
  if (root.contains("master_seed")) config.master_seed = root["master_seed"].get<std::uint64_t>();

  if (root.contains("methods")) {
    const json methods = root["methods"];
    if (!methods.is_array() || methods.empty())
      throw InvalidParameter("'methods' must be a nonempty array");
    config.methods.clear();
    for (const auto& entry : methods) {
      const auto method = harness::method_from_string(entry.get<std::string>());
      if (!method)
        throw InvalidParameter("unknown method '" + entry.get<std::string>() + "'");
      config.methods.push_back(*method);
    }
  }

  if (root.contains("k_policy")) {
    const json policy = root["k_policy"];
    if (policy.is_string()) {
      const std::string name = policy.get<std::string>();
      if (name == "kstar")
        config.k_policy = harness::KStarPolicy{};
      else if (name == "adaptive")
        config.k_policy = harness::AdaptivePolicy{};
      else
        throw InvalidParameter("unknown k_policy '" + name + "'");
    } else if (policy.is_object()) {
      check_known_keys(policy, {"fixed"}, "k_policy");
      config.k_policy = harness::FixedK{require_key(policy, "fixed", "k_policy").get<long>()};
    } else {
      throw InvalidParameter("'k_policy' must be a string or an object with a 'fixed' key");
    }
  }
  return config;
}

harness::ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "': " + std::strerror(errno));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

}  // namespace markovcp::io
