#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vsnav/planner.hpp"

namespace vsnav {

struct VelocityCommand {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
};

struct CommandLimits {
  double v_max = 0.5;
  double w_max = 1.5;

  VelocityCommand clamp(VelocityCommand c) const {
    c.linear = std::clamp(c.linear, -v_max, v_max);
    c.angular = std::clamp(c.angular, -w_max, w_max);
    return c;
  }
};

/// Snapshot of everything a behaviour may consult on one control tick.
struct Situation {
  Configuration pose;
  double pitch = 0.0;  // measured vehicle attitude
  double roll = 0.0;
  const PlanResult* plan = nullptr;
  const Costmap* costmap = nullptr;
  const VehicleParams* vehicle = nullptr;
  VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase;
  PlanFailure last_plan_failure = PlanFailure::None;
  double time = 0.0;
};

struct BehaviourDecision {
  const char* id = "";
  bool admissible = false;
  VelocityCommand command;
  bool stuck = false;
};

/// Index of the first admissible decision, in priority order. The caller
/// appends a stop fallback, so a valid index always exists.
inline std::size_t arbitrate_index(std::span<const BehaviourDecision> decisions) {
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i].admissible) return i;
  }
  return decisions.empty() ? 0 : decisions.size() - 1;
}

inline VelocityCommand arbitrate(std::span<const BehaviourDecision> decisions) {
  if (decisions.empty()) return {};
  const std::size_t i = arbitrate_index(decisions);
  return decisions[i].admissible ? decisions[i].command : VelocityCommand{};
}

inline BehaviourDecision stop_decision() {
  return BehaviourDecision{"stop", true, VelocityCommand{}, false};
}

/// Pure pursuit on the planner path. Inadmissible when there is no path,
/// the path is consumed, the vehicle attitude is outside the follower's
/// (slightly widened) limits, or upcoming path poses have become fatal on
/// the latest costmap.
struct PathFollowParams {
  double lookahead = 0.8;
  double attitude_margin = deg_to_rad(5.0);
  double heading_gain = 2.0;
  double end_distance = 0.05;        // path considered consumed below this
  double slowdown_distance = 0.8;    // taper toward the path end
  double invalidation_horizon = 1.0; // recheck this much path ahead
  // Approach caution: creep while the path ahead runs onto virtual terrain,
  // so fatality can be recognized before the footprint arrives.
  double caution_horizon = 1.5;
  double caution_fraction = 0.5;
};

class PathFollow {
 public:
  using Params = PathFollowParams;

  explicit PathFollow(Params params = Params(), CommandLimits limits = CommandLimits())
      : params_(params), limits_(limits) {}

  BehaviourDecision decide(const Situation& s) const {
    BehaviourDecision d;
    d.id = "path_follow";
    if (s.plan == nullptr || s.plan->status == PlanStatus::Failed ||
        s.plan->path.empty() || s.vehicle == nullptr) {
      return d;
    }
    const double pitch_limit = s.vehicle->max_pitch + params_.attitude_margin;
    const double roll_limit = s.vehicle->max_roll + params_.attitude_margin;
    if (std::abs(s.pitch) > pitch_limit || std::abs(s.roll) > roll_limit) return d;

    const auto& path = s.plan->path;
    std::size_t nearest = 0;
    double nearest_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.size(); ++i) {
      const double dx = path[i].config.x - s.pose.x;
      const double dy = path[i].config.y - s.pose.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < nearest_d2) {
        nearest_d2 = d2;
        nearest = i;
      }
    }

    double remaining = 0.0;
    for (std::size_t i = nearest + 1; i < path.size(); ++i) {
      remaining += std::hypot(path[i].config.x - path[i - 1].config.x,
                              path[i].config.y - path[i - 1].config.y);
    }
    if (remaining < params_.end_distance) return d;

    // Drop the path when cells under it turned fatal since planning, and
    // creep while it leads onto virtual terrain (except when the policy
    // treats virtual surfaces as plain ground).
    bool cautious = false;
    if (s.costmap != nullptr) {
      const double horizon =
          std::max(params_.invalidation_horizon, params_.caution_horizon);
      double span = 0.0;
      for (std::size_t i = nearest; i + 1 < path.size() && span < horizon; ++i) {
        span += std::hypot(path[i + 1].config.x - path[i].config.x,
                           path[i + 1].config.y - path[i].config.y);
        if (span < params_.invalidation_horizon) {
          bool fatal = false;
          for_each_footprint_cell(*s.costmap, path[i + 1].config, *s.vehicle, 1,
                                  [&](int ci, int cj, double, double) {
                                    if (!fatal && s.costmap->at(ci, cj).fatal())
                                      fatal = true;
                                  });
          if (fatal) return d;
        }
        if (s.policy != VirtualSurfacePolicy::Traversable && !cautious &&
            span < params_.caution_horizon) {
          // Only virtual terrain dropping below the vehicle's level calls
          // for caution; the shadow ring around the sensor does not.
          const double floor_limit = s.costmap->reference_height() - 0.3;
          for_each_footprint_cell(*s.costmap, path[i + 1].config, *s.vehicle, 2,
                                  [&](int ci, int cj, double, double) {
                                    const CostmapCell& cell = s.costmap->at(ci, cj);
                                    if (!cautious &&
                                        cell.cell_class == CellClass::Virtual &&
                                        cell.height < floor_limit)
                                      cautious = true;
                                  });
        }
      }
    }

    // Lookahead target along the polyline.
    std::size_t target = nearest;
    double accum = 0.0;
    while (target + 1 < path.size() && accum < params_.lookahead) {
      accum += std::hypot(path[target + 1].config.x - path[target].config.x,
                          path[target + 1].config.y - path[target].config.y);
      ++target;
    }

    const std::size_t seg = target > 0 ? target - 1 : 0;
    const double seg_dx = path[target].config.x - path[seg].config.x;
    const double seg_dy = path[target].config.y - path[seg].config.y;
    const double seg_len = std::hypot(seg_dx, seg_dy);

    d.admissible = true;
    if (seg_len < 1e-6) {
      // Rotation-only segment: align with the target yaw.
      const double err = wrap_angle(path[target].config.yaw - s.pose.yaw);
      d.command.angular = params_.heading_gain * err;
      d.command.linear = 0.0;
      d.command = limits_.clamp(d.command);
      return d;
    }

    const bool reverse =
        std::cos(std::atan2(seg_dy, seg_dx) - path[seg].config.yaw) < 0.0;
    const double to_target = std::atan2(path[target].config.y - s.pose.y,
                                        path[target].config.x - s.pose.x);
    const double err = reverse ? wrap_angle(to_target - s.pose.yaw - kPi)
                               : wrap_angle(to_target - s.pose.yaw);
    const double speed_scale =
        std::max(0.0, std::cos(err)) *
        std::clamp(remaining / params_.slowdown_distance, 0.25, 1.0) *
        (cautious ? params_.caution_fraction : 1.0);
    d.command.linear = (reverse ? -1.0 : 1.0) * limits_.v_max * speed_scale;
    d.command.angular = params_.heading_gain * err;
    d.command = limits_.clamp(d.command);
    return d;
  }

 private:
  Params params_;
  CommandLimits limits_;
};

/// Turns the nose downhill and descends when pitch or roll exceed the safe
/// band; keeps control (hysteresis) until attitude drops below 80% of the
/// limit so the behaviour does not chatter at the threshold.
struct OrientationCorrectionParams {
  double attitude_margin = deg_to_rad(5.0);
  double release_fraction = 0.8;
  double heading_gain = 1.5;
  double descend_speed_fraction = 0.5;
};

class OrientationCorrection {
 public:
  using Params = OrientationCorrectionParams;

  explicit OrientationCorrection(Params params = Params(), CommandLimits limits = CommandLimits())
      : params_(params), limits_(limits) {}

  BehaviourDecision decide(const Situation& s) {
    BehaviourDecision d;
    d.id = "orientation_correction";
    if (s.vehicle == nullptr) return d;
    const double pitch_limit = s.vehicle->max_pitch + params_.attitude_margin;
    const double roll_limit = s.vehicle->max_roll + params_.attitude_margin;
    const double scale = active_ ? params_.release_fraction : 1.0;
    const bool excessive = std::abs(s.pitch) > scale * pitch_limit ||
                           std::abs(s.roll) > scale * roll_limit;
    active_ = excessive;
    if (!excessive) return d;
    d.admissible = true;

    TerrainPose tp;
    if (s.costmap != nullptr) {
      tp = estimate_terrain_pose(*s.costmap, s.pose, *s.vehicle, s.policy);
    } else {
      tp.degenerate = true;
    }
    if (tp.degenerate) {
      d.command.linear = -0.5 * limits_.v_max;  // back out slowly
      d.command = limits_.clamp(d.command);
      return d;
    }

    const Vec2 heading(std::cos(s.pose.yaw), std::sin(s.pose.yaw));
    const Vec2 left(-heading.y(), heading.x());
    const Vec2 gradient = std::tan(tp.pitch) * heading + std::tan(tp.roll) * left;
    if (gradient.norm() < 1e-6) {
      d.command.linear = -0.5 * limits_.v_max;
      d.command = limits_.clamp(d.command);
      return d;
    }
    const Vec2 downhill = -gradient.normalized();
    const double err = wrap_angle(std::atan2(downhill.y(), downhill.x()) - s.pose.yaw);
    d.command.angular = params_.heading_gain * err;
    d.command.linear =
        std::abs(err) < 0.6 ? params_.descend_speed_fraction * limits_.v_max : 0.0;
    d.command = limits_.clamp(d.command);
    return d;
  }

  bool active() const { return active_; }

 private:
  Params params_;
  CommandLimits limits_;
  bool active_ = false;
};

/// Creeps off fatal-costed terrain when planning failed because the start
/// footprint itself overlaps a fatal cell. Tries eight headings and picks
/// the one that clears the footprint soonest, preferring reverse on ties.
struct DecollideParams {
  double probe_step = 0.1;
  double max_probe = 1.0;
  double creep_speed = 0.15;
  double heading_gain = 1.5;
  double clearance_margin = 0.25;  // clear to where the planner accepts a start
};

class Decollide {
 public:
  using Params = DecollideParams;

  explicit Decollide(Params params = Params(), CommandLimits limits = CommandLimits())
      : params_(params), limits_(limits) {}

  BehaviourDecision decide(const Situation& s) const {
    BehaviourDecision d;
    d.id = "decollide";
    if (s.last_plan_failure != PlanFailure::StartFatal || s.costmap == nullptr ||
        s.vehicle == nullptr) {
      return d;
    }
    d.admissible = true;

    // Clearing is judged with the same grown footprint the planner uses, so
    // the manoeuvre ends somewhere planning can resume.
    VehicleParams grown = *s.vehicle;
    grown.length += 2.0 * params_.clearance_margin;
    grown.width += 2.0 * params_.clearance_margin;
    auto footprint_fatal = [&](const Configuration& c) {
      bool fatal = false;
      for_each_footprint_cell(*s.costmap, c, grown, 1,
                              [&](int i, int j, double, double) {
                                if (!fatal && s.costmap->at(i, j).fatal()) fatal = true;
                              });
      return fatal;
    };

    auto clearing_distance = [&](double dir) {
      for (double probe = params_.probe_step; probe <= params_.max_probe + 1e-9;
           probe += params_.probe_step) {
        Configuration c = s.pose;
        c.x += probe * std::cos(dir);
        c.y += probe * std::sin(dir);
        if (!footprint_fatal(c)) return probe;
      }
      return std::numeric_limits<double>::infinity();
    };

    // Moves along the current axis need no rotation; rotating in place
    // sweeps the corners and can dig the footprint deeper in. Prefer
    // straight back, then straight ahead, then absolute headings.
    const double back_clear = clearing_distance(wrap_angle(s.pose.yaw + kPi));
    const double fwd_clear = clearing_distance(s.pose.yaw);
    if (std::isfinite(back_clear) && back_clear <= fwd_clear) {
      d.command.linear = -params_.creep_speed;
      return d;
    }
    if (std::isfinite(fwd_clear)) {
      d.command.linear = params_.creep_speed;
      return d;
    }

    double best_clear = std::numeric_limits<double>::infinity();
    double best_dir = 0.0;
    double best_reverse_rank = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 8; ++k) {
      const double dir = wrap_angle(k * kPi / 4.0);  // world frame: stable targets
      const double clear = clearing_distance(dir);
      if (!std::isfinite(clear)) continue;
      const double reverse_rank = std::abs(wrap_angle(dir - s.pose.yaw - kPi));
      if (clear < best_clear - 1e-9 ||
          (std::abs(clear - best_clear) <= 1e-9 && reverse_rank < best_reverse_rank)) {
        best_clear = clear;
        best_dir = dir;
        best_reverse_rank = reverse_rank;
      }
    }

    if (!std::isfinite(best_clear)) {
      d.command = VelocityCommand{};
      d.stuck = true;
      return d;
    }

    const double forward_err = wrap_angle(best_dir - s.pose.yaw);
    const double backward_err = wrap_angle(best_dir - s.pose.yaw - kPi);
    const bool reverse = std::abs(backward_err) < std::abs(forward_err);
    const double err = reverse ? backward_err : forward_err;
    if (std::abs(err) > deg_to_rad(30.0)) {
      d.command.linear = 0.0;
      d.command.angular = std::copysign(0.5 * limits_.w_max, err);
    } else {
      d.command.linear = (reverse ? -1.0 : 1.0) * params_.creep_speed;
      d.command.angular = params_.heading_gain * err;
    }
    d.command = limits_.clamp(d.command);
    return d;
  }

 private:
  Params params_;
  CommandLimits limits_;
};

}  // namespace vsnav
