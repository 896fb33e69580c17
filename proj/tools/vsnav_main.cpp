// Command-line harness: single scenario runs, the policy comparison table,
// costmap snapshot rendering, and occupancy map dumps.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "vsnav/harness.hpp"
#include "vsnav/io/image.hpp"
#include "vsnav/io/map_dump.hpp"
#include "vsnav/io/scenario_file.hpp"
#include "vsnav/io/trace.hpp"

namespace fs = std::filesystem;
using namespace vsnav;

namespace {

struct ScenarioSource {
  ScenarioSpec spec;
  std::string text;  // raw file contents; empty for built-ins
};

ScenarioSource load_scenario_arg(const std::string& arg) {
  ScenarioSource out;
  if (fs::exists(arg)) {
    std::ifstream f(arg);
    std::ostringstream buf;
    buf << f.rdbuf();
    out.text = buf.str();
    out.spec = load_scenario_file(arg);
    return out;
  }
  out.spec = builtin_scenario(arg, VirtualSurfacePolicy::BestCase, 1);
  return out;
}

void apply_overrides(ScenarioSpec& spec, const std::optional<std::string>& policy,
                     const std::optional<std::uint64_t>& seed,
                     const std::optional<double>& timeout) {
  if (policy) {
    const auto p = parse_policy(*policy);
    if (!p) throw CLI::ValidationError("--policy", "unknown policy: " + *policy);
    spec.policy = *p;
  }
  if (seed) spec.seed = *seed;
  if (timeout) spec.timeout = *timeout;
}

void append_run_csv(const fs::path& path, const RunRow& row) {
  const bool fresh = !fs::exists(path);
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  if (fresh) f << run_csv_header();
  f << format_run_row(row);
}

/// Replays a trace's scenario to a given time and captures the pipeline
/// state then. Throws when the time lies outside the recorded trace.
struct ReplayCapture {
  std::shared_ptr<Costmap> costmap;
  std::shared_ptr<PlanResult> plan;
  Configuration pose;
  Vec2 goal;
  VehicleParams vehicle;
};

ReplayCapture replay_to(const ParsedTrace& trace, double time) {
  if (trace.ticks.empty() || time < 0.0 || time > trace.ticks.back().time + 1e-9)
    throw std::runtime_error("requested time lies outside the trace");

  ScenarioSpec spec;
  if (!trace.header.scenario_text.empty()) {
    spec = parse_scenario_text(trace.header.scenario_text, trace.header.scenario_name);
  } else {
    spec = builtin_scenario(trace.header.scenario_name, VirtualSurfacePolicy::BestCase, 1);
  }
  const auto policy = parse_policy(trace.header.policy);
  if (!policy) throw std::runtime_error("trace has unknown policy " + trace.header.policy);
  spec.policy = *policy;
  spec.seed = trace.header.seed;
  spec.timeout = std::max(time, spec.config.cadence.control_dt);

  ReplayCapture cap;
  cap.goal = spec.goal;
  cap.vehicle = spec.config.vehicle;
  SimHooks hooks;
  hooks.on_costmap = [&](double, const Costmap& cm) {
    cap.costmap = std::make_shared<Costmap>(cm);
  };
  hooks.on_plan = [&](double, const PlanResult& pr, const Costmap&) {
    cap.plan = std::make_shared<PlanResult>(pr);
  };
  hooks.on_tick = [&](const TickRecord& tick) {
    cap.pose = Configuration{tick.state.x, tick.state.y, tick.state.yaw};
  };
  run_scenario(spec, &hooks);
  if (!cap.costmap) throw std::runtime_error("no costmap was produced before that time");
  return cap;
}

int cmd_run(const std::string& scenario_arg, const std::optional<std::string>& policy,
            const std::optional<std::uint64_t>& seed, const std::optional<double>& timeout,
            const std::string& out_dir, bool strict, double snapshot_every) {
  ScenarioSource src = load_scenario_arg(scenario_arg);
  apply_overrides(src.spec, policy, seed, timeout);
  const ScenarioSpec& spec = src.spec;

  fs::create_directories(out_dir);
  const fs::path trace_path = fs::path(out_dir) / (spec.name + "_trace.txt");
  std::ofstream trace_file(trace_path);
  TickTraceWriter trace(trace_file,
                        TraceHeader{spec.name, policy_name(spec.policy), spec.seed,
                                    spec.timeout, src.text});

  std::shared_ptr<Costmap> latest_costmap;
  std::shared_ptr<PlanResult> latest_plan;
  Configuration latest_pose = spec.start;
  double next_snapshot = snapshot_every > 0.0 ? snapshot_every : -1.0;
  int snapshot_index = 0;

  SimHooks hooks;
  hooks.on_costmap = [&](double, const Costmap& cm) {
    latest_costmap = std::make_shared<Costmap>(cm);
  };
  hooks.on_plan = [&](double, const PlanResult& pr, const Costmap&) {
    latest_plan = std::make_shared<PlanResult>(pr);
  };
  hooks.on_tick = [&](const TickRecord& tick) {
    trace.record(tick);
    latest_pose = Configuration{tick.state.x, tick.state.y, tick.state.yaw};
    if (next_snapshot > 0.0 && tick.time + 1e-9 >= next_snapshot && latest_costmap) {
      SnapshotOverlays ov;
      ov.plan = latest_plan.get();
      ov.robot = &latest_pose;
      ov.vehicle = &spec.config.vehicle;
      ov.goal = &spec.goal;
      char name[64];
      std::snprintf(name, sizeof name, "%s_snap_%03d.ppm", spec.name.c_str(),
                    snapshot_index++);
      render_costmap(*latest_costmap, ov).save_ppm((fs::path(out_dir) / name).string());
      next_snapshot += snapshot_every;
    }
  };

  const RunResult result = run_scenario(spec, &hooks);

  const RunRow row{spec.name, policy_name(spec.policy), spec.seed, result.success,
                   result.duration, reason_name(result.reason)};
  append_run_csv(fs::path(out_dir) / "runs.csv", row);

  std::cout << "scenario:  " << spec.name << "\n"
            << "policy:    " << policy_name(spec.policy) << "\n"
            << "seed:      " << spec.seed << "\n"
            << "result:    " << (result.success ? "success" : "failure") << " ("
            << reason_name(result.reason) << ")\n"
            << "duration:  " << result.duration << " s\n"
            << "trace:     " << trace_path.string() << "\n";

  if (strict && (result.reason == RunReason::Fell || result.reason == RunReason::Stuck))
    return 2;
  return 0;
}

int cmd_table(const std::vector<std::string>& scenarios,
              const std::vector<std::string>& policies, int samples,
              std::uint64_t base_seed, const std::string& out_dir) {
  ExperimentConfig config;
  config.scenarios = scenarios;
  config.policies.clear();
  for (const std::string& p : policies) {
    const auto parsed = parse_policy(p);
    if (!parsed) throw CLI::ValidationError("--policies", "unknown policy: " + p);
    config.policies.push_back(*parsed);
  }
  config.samples = samples;
  config.base_seed = base_seed;

  const MatrixResult result = run_matrix(config);

  fs::create_directories(out_dir);
  {
    std::ofstream runs(fs::path(out_dir) / "runs.csv");
    runs << result.runs_csv();
    std::ofstream report(fs::path(out_dir) / "report.csv");
    report << result.report_csv();
  }
  std::cout << result.report_table();
  return 0;
}

int cmd_snapshot(const std::string& trace_arg, double time, const std::string& out_path) {
  const ParsedTrace trace = read_trace_file(trace_arg);
  const ReplayCapture cap = replay_to(trace, time);
  SnapshotOverlays ov;
  ov.plan = cap.plan.get();
  ov.robot = &cap.pose;
  ov.vehicle = &cap.vehicle;
  ov.goal = &cap.goal;
  render_costmap(*cap.costmap, ov).save_ppm(out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_dump_map(const std::string& scenario_arg, const std::optional<std::string>& policy,
                 const std::optional<std::uint64_t>& seed, double time,
                 const std::string& out_path) {
  ScenarioSource src = load_scenario_arg(scenario_arg);
  apply_overrides(src.spec, policy, seed, std::nullopt);
  if (time > 0.0) src.spec.timeout = time;

  std::string last_dump;
  SimHooks hooks;
  hooks.on_map_update = [&](double, const OccupancyMap3D& map) {
    last_dump = map_dump_string(map);
  };
  run_scenario(src.spec, &hooks);
  if (last_dump.empty()) throw std::runtime_error("no map update happened before that time");

  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << last_dump;
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-surface negative obstacle navigation harness"};
  app.require_subcommand(1);

  // run
  std::string run_scenario_arg, run_out = "out";
  std::optional<std::string> run_policy;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_timeout;
  bool run_strict = false;
  double run_snapshot_every = 0.0;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("scenario", run_scenario_arg,
                  "scenario file or built-in name (trench, ramp, cliff_bypass)")
      ->required();
  run->add_option("--policy", run_policy, "best_case | non_traversable | traversable");
  run->add_option("--seed", run_seed, "random seed");
  run->add_option("--timeout", run_timeout, "timeout in seconds");
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--strict", run_strict, "nonzero exit on fell/stuck");
  run->add_option("--snapshot-every", run_snapshot_every,
                  "write a costmap snapshot every N seconds");

  // table
  std::vector<std::string> table_scenarios = {"trench", "ramp"};
  std::vector<std::string> table_policies = {"best_case", "non_traversable", "traversable"};
  int table_samples = 10;
  std::uint64_t table_base_seed = 1;
  std::string table_out = "out";
  auto* table = app.add_subcommand("table", "run the policy comparison matrix");
  table->add_option("--scenarios", table_scenarios, "scenario names")->delimiter(',');
  table->add_option("--policies", table_policies, "policies to compare")->delimiter(',');
  table->add_option("--samples", table_samples, "samples per cell");
  table->add_option("--base-seed", table_base_seed, "seed of sample 0");
  table->add_option("--out", table_out, "output directory");

  // snapshot
  std::string snap_trace, snap_out = "snapshot.ppm";
  double snap_time = 0.0;
  auto* snapshot = app.add_subcommand("snapshot", "render a costmap image from a trace");
  snapshot->add_option("trace", snap_trace, "tick trace file")->required();
  snapshot->add_option("--time", snap_time, "simulation time to render")->required();
  snapshot->add_option("--out", snap_out, "output image (PPM)");

  // dump-map
  std::string dump_scenario, dump_out = "map.txt";
  std::optional<std::string> dump_policy;
  std::optional<std::uint64_t> dump_seed;
  double dump_time = 0.0;
  auto* dump = app.add_subcommand("dump-map", "write the occupancy map dump of a run");
  dump->add_option("scenario", dump_scenario, "scenario file or built-in name")->required();
  dump->add_option("--policy", dump_policy, "policy override");
  dump->add_option("--seed", dump_seed, "seed override");
  dump->add_option("--time", dump_time, "dump at this simulation time (default: end)");
  dump->add_option("--out", dump_out, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_scenario_arg, run_policy, run_seed, run_timeout, run_out,
                     run_strict, run_snapshot_every);
    }
    if (table->parsed()) {
      return cmd_table(table_scenarios, table_policies, table_samples, table_base_seed,
                       table_out);
    }
    if (snapshot->parsed()) return cmd_snapshot(snap_trace, snap_time, snap_out);
    if (dump->parsed()) return cmd_dump_map(dump_scenario, dump_policy, dump_seed,
                                            dump_time, dump_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
