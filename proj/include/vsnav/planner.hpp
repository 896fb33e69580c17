#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "vsnav/costmap.hpp"

namespace vsnav {

struct Configuration {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // normalized to (-pi, pi]

  Vec2 position() const { return Vec2(x, y); }
};

struct TerrainPose {
  double pitch = 0.0;  // > 0: terrain rises along heading
  double roll = 0.0;   // > 0: terrain rises to the left
  double height = 0.0;
  double support_fraction = 0.0;
  bool degenerate = false;
};

struct VehicleParams {
  double length = 1.0;
  double width = 0.7;
  double min_turn_radius = 0.0;  // 0 allows point turns
  double max_pitch = deg_to_rad(35.0);
  double max_roll = deg_to_rad(30.0);
  double clearance_height = 0.5;

  double circumradius() const { return 0.5 * std::hypot(length, width); }
  double inscribed_radius() const { return 0.5 * std::min(length, width); }
};

enum class PlanStatus : std::uint8_t { Complete, Partial, Failed };

enum class PlanFailure : std::uint8_t {
  None,
  StartFatal,
  NoAdmissibleSuccessor,
  BudgetExhaustedEmptyFrontier,
};

struct PathPoint {
  Configuration config;
  TerrainPose terrain;
};

struct PlanResult {
  PlanStatus status = PlanStatus::Failed;
  PlanFailure failure = PlanFailure::None;
  std::vector<PathPoint> path;
  double cost = 0.0;
  std::size_t expansions = 0;
};

struct PlannerParams {
  double arc_length = 0.15;  // 1.5 cells
  int yaw_bins = 16;
  // Bounds blocked-search latency at desk scale; exhaustive searches over a
  // 10 m local map converge their partial endpoint well before this.
  std::size_t node_budget = 30000;
  double pitch_weight = 2.0;  // m per rad
  double roll_weight = 2.0;
  double reverse_multiplier = 2.0;
  double yaw_weight = 0.3;  // m per rad, also prices point turns
  double goal_tolerance = 0.5;
  int fit_stride = 2;   // footprint sampling stride for plane fits
  // Footprint growth for fatal checks: absorbs tracking error plus the
  // backward creep of a fatal band as a virtual envelope steepens.
  double fatal_margin = 0.25;
  // Greedy bias on the heuristic. Flat open maps otherwise present a huge
  // f-plateau that breadth-explores into the node budget, which makes the
  // truncated partial endpoint unstable between replans.
  double heuristic_weight = 1.25;
};

/// Visits the centres of all costmap cells under the footprint rectangle.
template <typename Fn>
void for_each_footprint_cell(const Costmap& cm, const Configuration& c,
                             const VehicleParams& vp, int stride, Fn&& fn) {
  const double res = cm.resolution();
  const double hl = 0.5 * vp.length, hw = 0.5 * vp.width;
  const double cy = std::cos(c.yaw), sy = std::sin(c.yaw);
  const double reach = vp.circumradius();
  int i0, j0, i1, j1;
  cm.cell_index(Vec2(c.x - reach, c.y - reach), i0, j0);
  cm.cell_index(Vec2(c.x + reach, c.y + reach), i1, j1);
  i0 = std::max(i0, 0);
  j0 = std::max(j0, 0);
  i1 = std::min(i1, cm.size_x() - 1);
  j1 = std::min(j1, cm.size_y() - 1);
  for (int j = j0; j <= j1; j += stride) {
    for (int i = i0; i <= i1; i += stride) {
      const Vec2 p = cm.cell_center(i, j);
      const double dx = p.x() - c.x, dy = p.y() - c.y;
      const double lx = cy * dx + sy * dy;   // along heading
      const double ly = -sy * dx + cy * dy;  // to the left
      if (std::abs(lx) <= hl && std::abs(ly) <= hw) fn(i, j, lx, ly);
    }
  }
}

namespace detail {

struct FootprintFit {
  TerrainPose pose;
  bool any_real = false;
};

inline FootprintFit footprint_plane_fit(const Costmap& cm, const Configuration& c,
                                        const VehicleParams& vp,
                                        VirtualSurfacePolicy policy, int stride) {
  FootprintFit out;
  // Normal equations for z = a*lx + b*ly + d, accumulated scalar-wise.
  double sxx = 0, sxy = 0, sx = 0, syy = 0, sy = 0, sn = 0;
  double sxz = 0, syz = 0, sz = 0;
  int known_count = 0, total = 0;
  double height_sum = 0.0;

  for_each_footprint_cell(cm, c, vp, stride, [&](int i, int j, double lx, double ly) {
    ++total;
    const CostmapCell& cell = cm.at(i, j);
    if (cell.cell_class == CellClass::Real) out.any_real = true;
    if (!cell.known()) return;
    ++known_count;
    const double z = cell.height;
    height_sum += z;
    if (policy == VirtualSurfacePolicy::Traversable &&
        cell.cell_class == CellClass::Virtual) {
      return;  // flat support at its recorded height
    }
    sxx += lx * lx;
    sxy += lx * ly;
    sx += lx;
    syy += ly * ly;
    sy += ly;
    sn += 1.0;
    sxz += lx * z;
    syz += ly * z;
    sz += z;
  });

  TerrainPose& tp = out.pose;
  tp.support_fraction = total > 0 ? static_cast<double>(known_count) / total : 0.0;
  // 3x3 symmetric solve by cofactor expansion.
  const double det = sxx * (syy * sn - sy * sy) - sxy * (sxy * sn - sy * sx) +
                     sx * (sxy * sy - syy * sx);
  if (sn < 3.0 || std::abs(det) < 1e-9) {
    tp.degenerate = true;
    tp.height = known_count > 0 ? height_sum / known_count : cm.reference_height();
    return out;
  }
  const double a = (sxz * (syy * sn - sy * sy) - sxy * (syz * sn - sy * sz) +
                    sx * (syz * sy - syy * sz)) /
                   det;
  const double b = (sxx * (syz * sn - sy * sz) - sxz * (sxy * sn - sx * sy) +
                    sx * (sxy * sz - syz * sx)) /
                   det;
  const double d = (sxx * (syy * sz - syz * sy) - sxy * (sxy * sz - syz * sx) +
                    sxz * (sxy * sy - syy * sx)) /
                   det;
  tp.pitch = std::atan(a);
  tp.roll = std::atan(b);
  tp.height = d;
  return out;
}

}  // namespace detail

/// Least-squares plane fit over the footprint's known-height cells,
/// decomposed into pitch along the heading and roll across it. Under the
/// Traversable policy virtual cells lend support but contribute no slope.
inline TerrainPose estimate_terrain_pose(
    const Costmap& cm, const Configuration& c, const VehicleParams& vp,
    VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase, int stride = 1) {
  return detail::footprint_plane_fit(cm, c, vp, policy, stride).pose;
}

/// Obstacle-aware lower-bound distance to the goal: Dijkstra over non-fatal
/// cells, 8-connected. Used as the hybrid A* heuristic.
class GoalDistanceField {
 public:
  GoalDistanceField(const Costmap& cm, const Vec2& goal) : cm_(&cm), goal_(goal) {
    int gi, gj;
    cm.cell_index(goal, gi, gj);
    if (!cm.in_bounds(gi, gj)) return;  // Euclidean fallback everywhere
    const int w = cm.size_x(), h = cm.size_y();
    dist_.assign(static_cast<std::size_t>(w) * h,
                 std::numeric_limits<float>::infinity());
    using Entry = std::pair<float, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    if (cm.at(gi, gj).fatal()) return;
    dist_[gj * w + gi] = 0.0f;
    open.emplace(0.0f, gj * w + gi);
    const float res = static_cast<float>(cm.resolution());
    const float diag = res * static_cast<float>(std::sqrt(2.0));
    while (!open.empty()) {
      const auto [d, idx] = open.top();
      open.pop();
      if (d > dist_[idx]) continue;
      const int i = idx % w, j = idx / w;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= w || nj < 0 || nj >= h) continue;
          if (cm.at(ni, nj).fatal()) continue;
          const float nd = d + ((di != 0 && dj != 0) ? diag : res);
          float& slot = dist_[nj * w + ni];
          if (nd < slot) {
            slot = nd;
            open.emplace(nd, nj * w + ni);
          }
        }
      }
    }
    valid_ = true;
  }

  bool valid() const { return valid_; }

  /// Distance-field value at a world point; infinity when unreachable,
  /// nullopt when the field is unavailable or the point is outside it.
  std::optional<double> value(const Vec2& p) const {
    if (!valid_) return std::nullopt;
    int i, j;
    cm_->cell_index(p, i, j);
    if (!cm_->in_bounds(i, j)) return std::nullopt;
    const float d = dist_[static_cast<std::size_t>(j) * cm_->size_x() + i];
    if (!std::isfinite(d)) return std::nullopt;
    return static_cast<double>(d);
  }

 private:
  const Costmap* cm_;
  Vec2 goal_;
  std::vector<float> dist_;
  bool valid_ = false;
};

inline double heuristic(const Configuration& c, const Configuration& goal,
                        const GoalDistanceField& field) {
  const double euclid = std::hypot(goal.x - c.x, goal.y - c.y);
  const auto d = field.value(c.position());
  return d ? std::max(*d, euclid) : euclid;
}

namespace detail {

/// Chebyshev (8-connected) distance in cells from a set of seed cells.
inline std::vector<std::uint16_t> chebyshev_field(const Costmap& cm,
                                                  const std::vector<int>& seeds) {
  const int w = cm.size_x(), h = cm.size_y();
  constexpr std::uint16_t kFar = 0xFFFF;
  std::vector<std::uint16_t> dist(static_cast<std::size_t>(w) * h, kFar);
  std::vector<int> frontier = seeds;
  for (int s : frontier) dist[s] = 0;
  std::vector<int> next;
  std::uint16_t level = 0;
  while (!frontier.empty() && level < kFar - 1) {
    ++level;
    next.clear();
    for (int idx : frontier) {
      const int i = idx % w, j = idx / w;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= w || nj < 0 || nj >= h) continue;
          const int nidx = nj * w + ni;
          if (dist[nidx] != kFar) continue;
          dist[nidx] = level;
          next.push_back(nidx);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

struct FootprintChecker {
  const Costmap* cm = nullptr;
  const VehicleParams* vp = nullptr;
  std::vector<std::uint16_t> field;  // Chebyshev cell distance to seed set
  bool any_seed = false;

  enum class Verdict { Clear, Hit, Boundary };

  Verdict quick(const Configuration& c) const {
    if (!any_seed) return Verdict::Clear;
    int i, j;
    cm->cell_index(c.position(), i, j);
    if (!cm->in_bounds(i, j)) return Verdict::Boundary;
    const double res = cm->resolution();
    const double d = field[static_cast<std::size_t>(j) * cm->size_x() + i] * res;
    if (d > vp->circumradius() + 1.5 * res) return Verdict::Clear;
    if (d * std::sqrt(2.0) < vp->inscribed_radius() - 1.5 * res) return Verdict::Hit;
    return Verdict::Boundary;
  }
};

}  // namespace detail

/// Hybrid A* over (x, y, yaw). Continuous states are binned into a lattice at
/// costmap resolution; successors are fixed-length forward/reverse arcs plus
/// point turns when the turn radius allows. A node is inadmissible when its
/// footprint overlaps a fatal cell, exceeds the pitch/roll limits, or violates
/// the virtual-surface policy. Returns the best partial path when the goal
/// cannot be reached.
inline PlanResult plan(const Costmap& cm, const Configuration& start,
                       const Configuration& goal, const VehicleParams& vp,
                       VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase,
                       const PlannerParams& params = PlannerParams()) {
  if (!cm.contains_world(start.position()))
    throw std::invalid_argument("planner start outside costmap extent");

  const double res = cm.resolution();
  const int w = cm.size_x(), h = cm.size_y();

  // Obstacle checks use a footprint grown by a safety margin so tracking
  // error cannot drag the true footprint onto a fatal cell.
  VehicleParams vp_check = vp;
  vp_check.length += 2.0 * params.fatal_margin;
  vp_check.width += 2.0 * params.fatal_margin;

  // Fast conservative footprint screens, exact rectangle test on boundary.
  detail::FootprintChecker fatal_check{&cm, &vp_check};
  detail::FootprintChecker virtual_check{&cm, &vp_check};
  {
    std::vector<int> fatal_seeds, virtual_seeds;
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        if (cm.at(i, j).fatal()) fatal_seeds.push_back(j * w + i);
        if (policy == VirtualSurfacePolicy::NonTraversable &&
            cm.at(i, j).cell_class == CellClass::Virtual) {
          virtual_seeds.push_back(j * w + i);
        }
      }
    }
    fatal_check.any_seed = !fatal_seeds.empty();
    if (fatal_check.any_seed) fatal_check.field = detail::chebyshev_field(cm, fatal_seeds);
    virtual_check.any_seed = !virtual_seeds.empty();
    if (virtual_check.any_seed)
      virtual_check.field = detail::chebyshev_field(cm, virtual_seeds);
  }

  auto footprint_overlaps = [&](const Configuration& c, bool virtual_class) {
    const detail::FootprintChecker& chk = virtual_class ? virtual_check : fatal_check;
    switch (chk.quick(c)) {
      case detail::FootprintChecker::Verdict::Clear: return false;
      case detail::FootprintChecker::Verdict::Hit: return true;
      default: break;
    }
    bool hit = false;
    for_each_footprint_cell(cm, c, vp_check, 1, [&](int i, int j, double, double) {
      if (hit) return;
      const CostmapCell& cell = cm.at(i, j);
      if (virtual_class ? cell.cell_class == CellClass::Virtual : cell.fatal()) hit = true;
    });
    return hit;
  };

  struct Admission {
    bool ok = false;
    TerrainPose terrain;
  };
  auto admit_exact = [&](const Configuration& c, bool is_start) -> Admission {
    Admission a;
    if (!cm.contains_world(c.position())) return a;
    if (footprint_overlaps(c, false)) return a;
    if (!is_start && policy == VirtualSurfacePolicy::NonTraversable &&
        footprint_overlaps(c, true)) {
      return a;
    }
    const detail::FootprintFit fit =
        detail::footprint_plane_fit(cm, c, vp, policy, params.fit_stride);
    a.terrain = fit.pose;
    if (!is_start) {
      // Purely virtual footprints are exempt from the attitude gate in
      // best-case mode; slopes against real observations still apply.
      const bool attitude_exempt = policy == VirtualSurfacePolicy::BestCase &&
                                   !a.terrain.degenerate && !fit.any_real;
      if (!attitude_exempt && (std::abs(a.terrain.pitch) > vp.max_pitch ||
                               std::abs(a.terrain.roll) > vp.max_roll)) {
        return a;
      }
    }
    a.ok = true;
    return a;
  };

  PlanResult result;

  const Admission start_admission = admit_exact(start, true);
  if (!start_admission.ok) {
    result.status = PlanStatus::Failed;
    result.failure = PlanFailure::StartFatal;
    return result;
  }

  // A goal beyond the local map can never be reached outright; the search
  // runs toward its projection onto the map and returns the best partial
  // path once it gets there instead of exhausting the node budget.
  const bool goal_inside = cm.contains_world(goal.position());
  Configuration goal_proxy = goal;
  if (!goal_inside) {
    const double margin = 2.0 * res;
    goal_proxy.x = std::clamp(goal.x, cm.origin().x() + margin,
                              cm.origin().x() + w * res - margin);
    goal_proxy.y = std::clamp(goal.y, cm.origin().y() + margin,
                              cm.origin().y() + h * res - margin);
  }

  const GoalDistanceField goal_field(cm, goal.position());

  struct Node {
    Configuration config;
    TerrainPose terrain;
    double g = 0.0;
    double g_terrain = 0.0;
    std::int32_t parent = -1;
  };
  std::vector<Node> nodes;
  nodes.push_back(Node{start, start_admission.terrain, 0.0, 0.0, -1});

  const int yaw_bins = std::max(4, params.yaw_bins);
  auto bin_of = [&](const Configuration& c) -> std::int64_t {
    int i, j;
    cm.cell_index(c.position(), i, j);
    int yb = static_cast<int>(std::floor((c.yaw + kPi) / (2.0 * kPi) * yaw_bins));
    yb = std::clamp(yb, 0, yaw_bins - 1);
    return (static_cast<std::int64_t>(j) * w + i) * yaw_bins + yb;
  };
  std::vector<double> best_g(static_cast<std::size_t>(w) * h * yaw_bins,
                             std::numeric_limits<double>::infinity());

  // Admission is bin-quantized and cached for the duration of this search;
  // configurations within one lattice bin share their terrain estimate.
  std::vector<std::uint8_t> admit_state(best_g.size(), 0);  // 0 new, 1 ok, 2 no
  std::vector<TerrainPose> admit_terrain(best_g.size());
  auto admit_cached = [&](const Configuration& c, std::int64_t bin) -> Admission {
    if (admit_state[bin] == 1) return Admission{true, admit_terrain[bin]};
    if (admit_state[bin] == 2) return Admission{};
    const Admission a = admit_exact(c, false);
    admit_state[bin] = a.ok ? 1 : 2;
    if (a.ok) admit_terrain[bin] = a.terrain;
    return a;
  };

  struct OpenEntry {
    double f;
    double g;
    std::uint32_t seq;
    std::int32_t node;
  };
  struct OpenCompare {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
      if (a.f != b.f) return a.f > b.f;
      if (a.g != b.g) return a.g < b.g;  // deeper node first on f ties
      return a.seq > b.seq;
    }
  };
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenCompare> open;
  std::uint32_t seq = 0;

  auto h_of = [&](const Configuration& c) { return heuristic(c, goal, goal_field); };
  const double hw = std::max(1.0, params.heuristic_weight);
  best_g[bin_of(start)] = 0.0f;
  open.push(OpenEntry{hw * h_of(start), 0.0, seq++, 0});

  // Motion primitives: straight and curved arcs both ways; point turns when
  // the vehicle can spin in place (a nominal radius keeps arcs meaningful).
  struct Primitive {
    double curvature;
    double arc;  // signed, negative = reverse
    double spin; // in-place yaw change
  };
  std::vector<Primitive> primitives;
  {
    const double r_nominal =
        vp.min_turn_radius > 0.0 ? vp.min_turn_radius : std::max(vp.length, 4.0 * res);
    const double kappas[3] = {0.0, 1.0 / r_nominal, 0.5 / r_nominal};
    for (double k : kappas) {
      for (int sgn_k = (k == 0.0 ? 0 : -1); sgn_k <= (k == 0.0 ? 0 : 1); sgn_k += 2) {
        const double kk = k * (sgn_k == 0 ? 1.0 : sgn_k);
        primitives.push_back(Primitive{kk, params.arc_length, 0.0});
        primitives.push_back(Primitive{kk, -params.arc_length, 0.0});
        if (sgn_k == 0) break;
      }
    }
    if (vp.min_turn_radius == 0.0) {
      const double step = 2.0 * kPi / yaw_bins;
      primitives.push_back(Primitive{0.0, 0.0, step});
      primitives.push_back(Primitive{0.0, 0.0, -step});
    }
  }

  auto apply_primitive = [&](const Configuration& c, const Primitive& p) {
    Configuration n = c;
    if (p.spin != 0.0) {
      n.yaw = wrap_angle(c.yaw + p.spin);
      return n;
    }
    if (std::abs(p.curvature) < 1e-12) {
      n.x += p.arc * std::cos(c.yaw);
      n.y += p.arc * std::sin(c.yaw);
      return n;
    }
    const double dyaw = p.curvature * p.arc;
    const double r = 1.0 / p.curvature;
    n.x += r * (std::sin(c.yaw + dyaw) - std::sin(c.yaw));
    n.y -= r * (std::cos(c.yaw + dyaw) - std::cos(c.yaw));
    n.yaw = wrap_angle(c.yaw + dyaw);
    return n;
  };

  std::int32_t goal_node = -1;
  std::int32_t best_partial = 0;
  double best_partial_h = h_of(start);
  double best_partial_terrain = 0.0;
  std::size_t expansions = 0;
  bool budget_hit = false;

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (top.g > best_g[bin_of(nodes[top.node].config)] + 1e-9) continue;
    const Configuration current = nodes[top.node].config;

    // Partial-endpoint tracking: minimum heuristic-to-goal, with ties
    // grouped at cell granularity and broken by accumulated terrain penalty.
    const double cur_h = h_of(current);
    const bool h_better = cur_h < best_partial_h - res;
    const bool h_tied = !h_better && cur_h < best_partial_h + res;
    if (h_better || (h_tied && nodes[top.node].g_terrain < best_partial_terrain)) {
      best_partial = top.node;
      best_partial_h = std::min(best_partial_h, cur_h);
      best_partial_terrain = nodes[top.node].g_terrain;
    }

    if (goal_inside &&
        std::hypot(current.x - goal.x, current.y - goal.y) <= params.goal_tolerance) {
      goal_node = top.node;
      break;
    }
    if (!goal_inside && std::hypot(current.x - goal_proxy.x, current.y - goal_proxy.y) <=
                            params.goal_tolerance + 3.0 * res) {
      best_partial = top.node;  // as close as this map allows
      break;
    }

    if (++expansions >= params.node_budget) {
      budget_hit = true;
      break;
    }

    for (const Primitive& p : primitives) {
      const Configuration succ = apply_primitive(current, p);
      if (!cm.contains_world(succ.position())) continue;
      const std::int64_t bin = bin_of(succ);
      double& slot = best_g[bin];

      double base_edge;
      if (p.spin != 0.0) {
        base_edge = params.yaw_weight * std::abs(p.spin);
      } else {
        base_edge = std::abs(p.arc) * (p.arc < 0.0 ? params.reverse_multiplier : 1.0) +
                    params.yaw_weight * std::abs(p.curvature * p.arc);
      }
      if (nodes[top.node].g + base_edge >= slot) continue;  // dominated regardless

      if (p.spin == 0.0 && p.arc != 0.0) {
        Primitive half = p;
        half.arc *= 0.5;
        const Configuration mid = apply_primitive(current, half);
        if (!cm.contains_world(mid.position()) || footprint_overlaps(mid, false)) continue;
      }

      const Admission adm = admit_cached(succ, bin);
      if (!adm.ok) continue;

      const double terrain_cost = params.pitch_weight * std::abs(adm.terrain.pitch) +
                                  params.roll_weight * std::abs(adm.terrain.roll);
      const double g_new = nodes[top.node].g + base_edge + terrain_cost;
      if (g_new >= slot) continue;
      slot = g_new;
      nodes.push_back(Node{succ, adm.terrain, g_new,
                           nodes[top.node].g_terrain + terrain_cost, top.node});
      open.push(OpenEntry{g_new + hw * h_of(succ), g_new, seq++,
                          static_cast<std::int32_t>(nodes.size() - 1)});
    }
  }

  result.expansions = expansions;

  auto reconstruct = [&](std::int32_t idx) {
    std::vector<PathPoint> rev;
    for (std::int32_t n = idx; n >= 0; n = nodes[n].parent) {
      rev.push_back(PathPoint{nodes[n].config, nodes[n].terrain});
    }
    result.path.assign(rev.rbegin(), rev.rend());
    result.cost = nodes[idx].g;
  };

  if (goal_node >= 0) {
    result.status = PlanStatus::Complete;
    reconstruct(goal_node);
    return result;
  }

  if (nodes.size() <= 1) {
    result.status = PlanStatus::Failed;
    result.failure = budget_hit ? PlanFailure::BudgetExhaustedEmptyFrontier
                                : PlanFailure::NoAdmissibleSuccessor;
    return result;
  }

  result.status = PlanStatus::Partial;
  reconstruct(best_partial);
  return result;
}

}  // namespace vsnav
