#include <catch2/catch.hpp>

#include "vsnav/harness.hpp"
#include "vsnav/io/scenario_file.hpp"

using namespace vsnav;

namespace {

// Short-timeout variants of the built-in scenarios keep matrix tests quick.
ScenarioSpec quick_factory(const std::string& name, VirtualSurfacePolicy policy,
                           std::uint64_t seed) {
  ScenarioSpec spec = builtin_scenario(name, policy, seed);
  spec.timeout = 2.0;
  return spec;
}

}  // namespace

TEST_CASE("matrix runs produce one row per run and one report row per cell") {
  ExperimentConfig config;
  config.scenarios = {"trench"};
  config.policies = {VirtualSurfacePolicy::BestCase, VirtualSurfacePolicy::Traversable};
  config.samples = 2;
  config.base_seed = 100;

  const MatrixResult result = run_matrix(config, {}, {}, quick_factory);
  REQUIRE(result.rows.size() == 4);
  REQUIRE(result.report.size() == 2);

  CHECK(result.rows[0].policy == "best_case");
  CHECK(result.rows[0].seed == 100);
  CHECK(result.rows[1].seed == 101);
  CHECK(result.rows[2].policy == "traversable");
  CHECK(result.report[0].method == "best_case");
  CHECK(result.report[0].samples == 2);
  for (const ReportRow& r : result.report) {
    CHECK(r.success_rate >= 0.0);
    CHECK(r.success_rate <= 1.0);
    CHECK(r.duration_stddev >= 0.0);
  }
}

TEST_CASE("matrix output is byte-identical across repeated invocations") {
  ExperimentConfig config;
  config.scenarios = {"trench"};
  config.policies = {VirtualSurfacePolicy::BestCase};
  config.samples = 2;
  config.base_seed = 7;

  const MatrixResult a = run_matrix(config, {}, {}, quick_factory);
  const MatrixResult b = run_matrix(config, {}, {}, quick_factory);
  CHECK(a.runs_csv() == b.runs_csv());
  CHECK(a.report_csv() == b.report_csv());
  CHECK(a.report_table() == b.report_table());
}

TEST_CASE("individual cell runs reproduce from their recorded seed") {
  ExperimentConfig config;
  config.scenarios = {"trench"};
  config.policies = {VirtualSurfacePolicy::BestCase};
  config.samples = 3;
  config.base_seed = 50;
  const MatrixResult matrix = run_matrix(config, {}, {}, quick_factory);

  const RunRow& row = matrix.rows[1];
  const RunResult rerun =
      run_scenario(quick_factory(row.scenario, *parse_policy(row.policy), row.seed));
  CHECK(rerun.success == row.success);
  CHECK(rerun.duration == Approx(row.duration).margin(1e-9));
}
