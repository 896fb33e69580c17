#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/sim/scenario.hpp"

namespace vsnav {

/// One scenario run, as appended to the runs CSV.
struct RunRow {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  bool success = false;
  double duration = 0.0;
  std::string reason;
};

inline const char* run_csv_header() {
  return "scenario,policy,seed,success,duration,reason\n";
}

inline std::string format_run_row(const RunRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%llu,%d,%.1f,%s\n", row.scenario.c_str(),
                row.policy.c_str(), static_cast<unsigned long long>(row.seed),
                row.success ? 1 : 0, row.duration, row.reason.c_str());
  return buf;
}

inline RunRow parse_run_row(const std::string& line) {
  RunRow row;
  std::istringstream is(line);
  std::string field;
  auto next = [&](const char* what) {
    if (!std::getline(is, field, ','))
      throw std::runtime_error(std::string("run row: missing field ") + what);
    return field;
  };
  row.scenario = next("scenario");
  row.policy = next("policy");
  row.seed = std::stoull(next("seed"));
  row.success = std::stoi(next("success")) != 0;
  row.duration = std::stod(next("duration"));
  // The reason is the final field; tolerate a trailing newline.
  if (!std::getline(is, field)) throw std::runtime_error("run row: missing reason");
  while (!field.empty() && (field.back() == '\n' || field.back() == '\r')) field.pop_back();
  row.reason = field;
  return row;
}

/// One aggregate line of the policy/scenario comparison report.
struct ReportRow {
  std::string method;
  std::string scenario;
  double success_rate = 0.0;
  double duration_mean = 0.0;
  double duration_stddev = 0.0;
  int samples = 0;
};

inline const char* report_csv_header() {
  return "method,scenario,success_rate,duration_mean,duration_stddev,samples\n";
}

inline std::string format_report_row(const ReportRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.2f,%.2f,%d\n", row.method.c_str(),
                row.scenario.c_str(), row.success_rate, row.duration_mean,
                row.duration_stddev, row.samples);
  return buf;
}

inline std::string format_report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %-14s %-13s %-14s %s\n", "Method", "Scenario",
                "Success rate", "Duration mean", "Duration std dev");
  os << buf;
  os << std::string(72, '-') << "\n";
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %-14s %11.0f%% %14.1f %16.1f\n",
                  r.method.c_str(), r.scenario.c_str(), 100.0 * r.success_rate,
                  r.duration_mean, r.duration_stddev);
    os << buf;
  }
  return os.str();
}

}  // namespace vsnav
