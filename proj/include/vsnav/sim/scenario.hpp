#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vsnav/behaviours.hpp"
#include "vsnav/costmap.hpp"
#include "vsnav/heightmap.hpp"
#include "vsnav/occupancy_map.hpp"
#include "vsnav/planner.hpp"
#include "vsnav/sim/sensor.hpp"
#include "vsnav/sim/vehicle.hpp"
#include "vsnav/sim/world.hpp"

namespace vsnav {

/// Fixed deterministic subsystem cadence. Sensor batches feed the map and
/// the heightmap/costmap refresh together every map_period; replanning runs
/// at plan_period; behaviours and vehicle integration at control_dt.
struct SimCadence {
  double control_dt = 0.1;
  double map_period = 0.5;
  double plan_period = 1.0;
};

struct SimConfig {
  SensorModel sensor;
  VehicleParams vehicle;
  VehicleBody body;
  // The voxel grid is offset half a voxel vertically so level surfaces sit
  // mid-voxel instead of exactly on voxel boundaries, where returns would
  // straddle two layers and cell heights would flicker by one voxel.
  OccupancyMap3D::Params map{.origin = Vec3(0.0, 0.0, 0.05)};
  ColumnScanParams column;
  FatalityParams fatality;
  PlannerParams planner;
  PathFollow::Params follow;
  OrientationCorrection::Params orientation;
  Decollide::Params decollide;
  CommandLimits limits;
  SimCadence cadence;
  double local_region_half_extent = 4.8;  // heightmap region, inside the window
  double goal_radius = 0.5;
  double stuck_grace = 2.0;  // seconds of decollide-stuck before giving up
};

enum class SuccessRule : std::uint8_t { ReachGoal, SurviveUntilTimeout };

enum class RunReason : std::uint8_t { GoalReached, Timeout, Fell, Stuck };

inline const char* reason_name(RunReason r) {
  switch (r) {
    case RunReason::GoalReached: return "goal_reached";
    case RunReason::Timeout: return "timeout";
    case RunReason::Fell: return "fell";
    default: return "stuck";
  }
}

struct ScenarioSpec {
  std::string name = "scenario";
  std::shared_ptr<const WorldModel> world;
  Configuration start;
  Vec2 goal = Vec2::Zero();
  VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase;
  std::uint64_t seed = 1;
  double timeout = 60.0;
  SuccessRule success_rule = SuccessRule::ReachGoal;
  SimConfig config;

  void validate() const {
    if (!world) throw std::invalid_argument("scenario has no world");
    if (timeout <= 0.0) throw std::invalid_argument("scenario timeout must be positive");
    if (config.cadence.control_dt <= 0.0 || config.cadence.control_dt > 0.1)
      throw std::invalid_argument("control_dt must be in (0, 0.1]");
  }
};

struct RunDiagnostics {
  std::size_t rays_integrated = 0;
  std::size_t rays_skipped_nonfinite = 0;
  std::size_t virtual_bound_violations = 0;  // virtual cell below true ground
  std::size_t footprint_fatal_ticks = 0;
  std::size_t plans = 0;
  std::size_t map_updates = 0;
  bool stuck_flagged = false;
};

struct RunResult {
  bool success = false;
  double duration = 0.0;
  RunReason reason = RunReason::Timeout;
  std::size_t ticks = 0;
  RunDiagnostics diagnostics;
};

struct TickRecord {
  double time = 0.0;
  const char* behaviour = "";
  VelocityCommand command;
  VehicleState state;
};

/// Optional observation points into the closed loop; all are invoked in the
/// deterministic tick order and must not mutate the simulation.
struct SimHooks {
  std::function<void(double, const OccupancyMap3D&)> on_map_update;
  std::function<void(double, const Heightmap&)> on_heightmap;
  std::function<void(double, const Costmap&)> on_costmap;
  std::function<void(double, const PlanResult&, const Costmap&)> on_plan;
  std::function<void(const TickRecord&)> on_tick;
};

/// Runs one closed-loop scenario: sensing -> occupancy map -> heightmap ->
/// costmap -> planner -> behaviours -> vehicle step, at the configured
/// cadences, terminating on goal, fall, stuck or timeout. Fully
/// deterministic for a given spec and seed.
inline RunResult run_scenario(const ScenarioSpec& spec, const SimHooks* hooks = nullptr) {
  spec.validate();
  const WorldModel& world = *spec.world;
  const SimConfig& cfg = spec.config;
  const double dt = cfg.cadence.control_dt;
  const int ticks_per_map = std::max(1, static_cast<int>(std::lround(cfg.cadence.map_period / dt)));
  const int ticks_per_plan = std::max(1, static_cast<int>(std::lround(cfg.cadence.plan_period / dt)));
  const std::size_t total_ticks =
      static_cast<std::size_t>(std::ceil(spec.timeout / dt - 1e-9));

  RandomStream rng(spec.seed);
  VehicleState state = settled_state(world, cfg.vehicle, spec.start);
  const Box3 body_box = cfg.body.body_box(cfg.vehicle);

  OccupancyMap3D map(cfg.map, state.position());
  Vec3 last_crop = state.position();

  std::shared_ptr<const Costmap> costmap;
  std::shared_ptr<const PlanResult> plan_result;
  PlanFailure last_plan_failure = PlanFailure::None;

  PathFollow path_follow(cfg.follow, cfg.limits);
  OrientationCorrection orientation(cfg.orientation, cfg.limits);
  Decollide decollide(cfg.decollide, cfg.limits);

  RunResult result;
  std::vector<LidarRay> ray_buffer;
  double stuck_time = 0.0;

  auto finish = [&](RunReason reason, double duration, std::size_t ticks) {
    result.reason = reason;
    result.duration = duration;
    result.ticks = ticks;
    switch (reason) {
      case RunReason::GoalReached: result.success = true; break;
      case RunReason::Timeout:
        result.success = spec.success_rule == SuccessRule::SurviveUntilTimeout;
        break;
      default: result.success = false; break;
    }
    return result;
  };

  for (std::size_t k = 1; k <= total_ticks; ++k) {
    const double t_prev = (k - 1) * dt;
    const double t = k * dt;

    // Sense: poses held over the batch interval at the tick-start state.
    SensorFramePose sensor_pose{state.position(), state.rotation()};
    auto rays = raycast_scan(world, sensor_pose, t_prev, t, cfg.sensor, body_box, rng);
    ray_buffer.insert(ray_buffer.end(), rays.begin(), rays.end());

    if (k % static_cast<std::size_t>(ticks_per_map) == 0) {
      if ((state.position() - last_crop).norm() >= cfg.map.resolution) {
        map.crop_to_window(state.position());
        last_crop = state.position();
      }
      const auto stats = map.integrate_rays(ray_buffer);
      result.diagnostics.rays_integrated += stats.rays_integrated;
      result.diagnostics.rays_skipped_nonfinite += stats.rays_skipped_nonfinite;
      ray_buffer.clear();
      ++result.diagnostics.map_updates;
      if (hooks && hooks->on_map_update) hooks->on_map_update(t, map);

      const ColumnRegion region = centered_region(
          map, Vec2(state.x, state.y), cfg.local_region_half_extent);
      Heightmap hm = extract_heightmap(map, region, state.z, cfg.column);

      // Virtual surfaces must upper-bound the true terrain, with one voxel
      // of quantization slack. On slopes the envelope can legitimately reach
      // the lowest ground inside the cell, so compare against that.
      for (int j = 0; j < hm.size_y(); ++j) {
        for (int i = 0; i < hm.size_x(); ++i) {
          const HeightmapCell& cell = hm.at(i, j);
          if (cell.cell_class != CellClass::Virtual) continue;
          const Vec2 c = hm.cell_center(i, j);
          if (!world.contains(c.x(), c.y())) continue;  // void has no terrain
          // Infimum over the closed cell: corners sampled a hair outward so
          // ties on heightfield tile boundaries resolve to the outer tile.
          const double half = 0.5 * hm.resolution() + 1e-4;
          double ground = world.ground_height(c.x(), c.y());
          for (int cj = -1; cj <= 1; cj += 2) {
            for (int ci = -1; ci <= 1; ci += 2) {
              ground = std::min(
                  ground, world.ground_height(c.x() + ci * half, c.y() + cj * half));
            }
          }
          if (cell.height < ground - map.resolution() - 1e-6) {
            ++result.diagnostics.virtual_bound_violations;
          }
        }
      }
      if (hooks && hooks->on_heightmap) hooks->on_heightmap(t, hm);

      costmap = std::make_shared<Costmap>(build_costmap(hm, cfg.fatality, spec.policy));
      if (hooks && hooks->on_costmap) hooks->on_costmap(t, *costmap);
    }

    if (costmap && (k % static_cast<std::size_t>(ticks_per_plan) == 0 || !plan_result)) {
      const Configuration goal_cfg{spec.goal.x(), spec.goal.y(), 0.0};
      auto plan_out = std::make_shared<PlanResult>(
          plan(*costmap, state.config(), goal_cfg, cfg.vehicle, spec.policy, cfg.planner));
      plan_result = plan_out;
      last_plan_failure =
          plan_out->status == PlanStatus::Failed ? plan_out->failure : PlanFailure::None;
      ++result.diagnostics.plans;
      if (hooks && hooks->on_plan) hooks->on_plan(t, *plan_result, *costmap);
    }

    Situation situation;
    situation.pose = state.config();
    situation.pitch = state.pitch;
    situation.roll = state.roll;
    situation.plan = plan_result.get();
    situation.costmap = costmap.get();
    situation.vehicle = &cfg.vehicle;
    situation.policy = spec.policy;
    situation.last_plan_failure = last_plan_failure;
    situation.time = t;

    std::vector<BehaviourDecision> decisions;
    decisions.push_back(orientation.decide(situation));
    decisions.push_back(decollide.decide(situation));
    decisions.push_back(path_follow.decide(situation));
    decisions.push_back(stop_decision());
    const std::size_t chosen = arbitrate_index(decisions);
    const VelocityCommand cmd = cfg.limits.clamp(decisions[chosen].command);

    if (decisions[chosen].stuck) {
      result.diagnostics.stuck_flagged = true;
      stuck_time += dt;
      if (stuck_time >= cfg.stuck_grace) return finish(RunReason::Stuck, t, k);
    } else {
      stuck_time = 0.0;
    }

    if (costmap) {
      bool fatal_under = false;
      for_each_footprint_cell(*costmap, state.config(), cfg.vehicle, 1,
                              [&](int i, int j, double, double) {
                                if (!fatal_under && costmap->at(i, j).fatal())
                                  fatal_under = true;
                              });
      if (fatal_under) ++result.diagnostics.footprint_fatal_ticks;
    }

    state = step_vehicle(world, cfg.vehicle, cfg.body, state, dt, cmd);

    if (hooks && hooks->on_tick) {
      hooks->on_tick(TickRecord{t, decisions[chosen].id, cmd, state});
    }

    if (state.fallen) return finish(RunReason::Fell, t, k);
    if (std::hypot(state.x - spec.goal.x(), state.y - spec.goal.y()) <= cfg.goal_radius) {
      return finish(RunReason::GoalReached, t, k);
    }
  }
  return finish(RunReason::Timeout, spec.timeout, total_ticks);
}

/// Built-in evaluation scenarios matching the built-in worlds.
inline ScenarioSpec builtin_scenario(const std::string& name,
                                     VirtualSurfacePolicy policy,
                                     std::uint64_t seed) {
  ScenarioSpec spec;
  spec.name = name;
  spec.policy = policy;
  spec.seed = seed;
  if (name == "trench") {
    spec.world = std::make_shared<WorldModel>(make_trench_world());
    spec.start = Configuration{0.0, 0.0, 0.0};
    spec.goal = Vec2(10.0, 0.0);
    spec.success_rule = SuccessRule::SurviveUntilTimeout;
  } else if (name == "ramp") {
    spec.world = std::make_shared<WorldModel>(make_ramp_world());
    spec.start = Configuration{0.0, 0.0, 0.0};
    spec.goal = Vec2(12.5, 0.0);
    spec.success_rule = SuccessRule::ReachGoal;
  } else if (name == "cliff_bypass") {
    spec.world = std::make_shared<WorldModel>(make_cliff_bypass_world());
    spec.start = Configuration{0.0, -3.0, 0.0};
    spec.goal = Vec2(11.0, -3.0);
    spec.success_rule = SuccessRule::ReachGoal;
    spec.timeout = 90.0;
  } else {
    throw std::invalid_argument("unknown builtin scenario: " + name);
  }
  return spec;
}

}  // namespace vsnav
