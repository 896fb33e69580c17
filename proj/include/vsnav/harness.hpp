#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vsnav/io/csv.hpp"
#include "vsnav/sim/scenario.hpp"

namespace vsnav {

/// A policy x scenario x samples experiment matrix.
struct ExperimentConfig {
  std::vector<std::string> scenarios = {"trench", "ramp"};
  std::vector<VirtualSurfacePolicy> policies = {VirtualSurfacePolicy::BestCase,
                                                VirtualSurfacePolicy::NonTraversable,
                                                VirtualSurfacePolicy::Traversable};
  int samples = 10;
  std::uint64_t base_seed = 1;

  void validate() const {
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (scenarios.empty() || policies.empty())
      throw std::invalid_argument("experiment matrix is empty");
  }
};

struct MatrixResult {
  std::vector<RunRow> rows;        // one per run, in deterministic order
  std::vector<ReportRow> report;   // one per policy x scenario cell

  std::string runs_csv() const {
    std::string out = run_csv_header();
    for (const RunRow& r : rows) out += format_run_row(r);
    return out;
  }
  std::string report_csv() const {
    std::string out = report_csv_header();
    for (const ReportRow& r : report) out += format_report_row(r);
    return out;
  }
  std::string report_table() const { return format_report_table(report); }
};

using ScenarioFactory =
    std::function<ScenarioSpec(const std::string&, VirtualSurfacePolicy, std::uint64_t)>;

/// Runs the full matrix. Sample i of a cell uses base_seed + i so individual
/// failures reproduce in isolation. Cells run independently and results are
/// assembled in (policy, scenario, sample) order, so output is deterministic.
inline MatrixResult run_matrix(
    const ExperimentConfig& config,
    const std::function<void(const ScenarioSpec&, const RunResult&)>& observer = {},
    const std::function<SimHooks(const ScenarioSpec&)>& make_hooks = {},
    const ScenarioFactory& factory = {}) {
  config.validate();
  MatrixResult out;
  for (VirtualSurfacePolicy policy : config.policies) {
    for (const std::string& scenario : config.scenarios) {
      std::vector<double> durations;
      int successes = 0;
      for (int sample = 0; sample < config.samples; ++sample) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(sample);
        ScenarioSpec spec = factory ? factory(scenario, policy, seed)
                                    : builtin_scenario(scenario, policy, seed);
        RunResult result;
        if (make_hooks) {
          const SimHooks hooks = make_hooks(spec);
          result = run_scenario(spec, &hooks);
        } else {
          result = run_scenario(spec);
        }
        if (observer) observer(spec, result);
        out.rows.push_back(RunRow{scenario, policy_name(policy), seed, result.success,
                                  result.duration, reason_name(result.reason)});
        durations.push_back(result.duration);
        successes += result.success ? 1 : 0;
      }
      double mean = 0.0;
      for (double d : durations) mean += d;
      mean /= durations.size();
      double var = 0.0;
      if (durations.size() > 1) {
        for (double d : durations) var += (d - mean) * (d - mean);
        var /= (durations.size() - 1);
      }
      out.report.push_back(ReportRow{policy_name(policy), scenario,
                                     static_cast<double>(successes) / config.samples,
                                     mean, std::sqrt(var),
                                     static_cast<int>(durations.size())});
    }
  }
  return out;
}

}  // namespace vsnav
