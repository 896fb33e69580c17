#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vsnav/heightmap.hpp"

namespace vsnav {

/// How unobserved-region (virtual) surfaces are handled end to end.
/// BestCase treats their heights as the shallowest surface they could hide;
/// the other two are the evaluation baselines.
enum class VirtualSurfacePolicy : std::uint8_t {
  BestCase = 0,
  NonTraversable = 1,
  Traversable = 2,
};

inline const char* policy_name(VirtualSurfacePolicy p) {
  switch (p) {
    case VirtualSurfacePolicy::BestCase: return "best_case";
    case VirtualSurfacePolicy::NonTraversable: return "non_traversable";
    default: return "traversable";
  }
}

enum class Traversability : std::uint8_t { NonFatal = 0, Fatal = 1 };

struct CostmapCell {
  float height = std::numeric_limits<float>::quiet_NaN();
  CellClass cell_class = CellClass::Unknown;
  Traversability traversability = Traversability::NonFatal;

  bool fatal() const { return traversability == Traversability::Fatal; }
  bool known() const { return cell_class != CellClass::Unknown; }
};

struct FatalityParams {
  double max_step = 0.3;                  // largest traversable discrete step
  double max_slope = deg_to_rad(35.0);    // kept below the sensor's max down-angle
  double section_window = 1.0;            // 1D analysis window, ~vehicle length
  double concavity_width = 0.45;          // widest dip the tracks bridge
  // Heights are voxel quantized and virtual cells sit up to one voxel below
  // real neighbours of the same surface; rises get this much slack before
  // the slope test so quantization alone can never read as a fatal slope.
  double height_slack = 0.1;

  void validate() const {
    if (max_step <= 0 || max_slope <= 0 || section_window <= 0 || concavity_width <= 0)
      throw std::invalid_argument("fatality parameters must be positive");
    if (max_slope >= kPi / 2)
      throw std::invalid_argument("max_slope must be below pi/2");
    if (height_slack < 0)
      throw std::invalid_argument("height_slack must be non-negative");
  }
};

class Costmap {
 public:
  Costmap(double resolution, const Vec2& origin, int size_x, int size_y,
          double reference_height)
      : resolution_(resolution), origin_(origin), size_x_(size_x), size_y_(size_y),
        reference_height_(reference_height),
        cells_(static_cast<std::size_t>(size_x) * size_y) {}

  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  int size_x() const { return size_x_; }
  int size_y() const { return size_y_; }
  double reference_height() const { return reference_height_; }

  bool in_bounds(int i, int j) const {
    return i >= 0 && i < size_x_ && j >= 0 && j < size_y_;
  }

  CostmapCell& at(int i, int j) { return cells_[index(i, j)]; }
  const CostmapCell& at(int i, int j) const { return cells_[index(i, j)]; }

  /// Cell under a world point; out-of-extent points read as Unknown.
  const CostmapCell& at_world(const Vec2& p) const {
    int i, j;
    cell_index(p, i, j);
    if (!in_bounds(i, j)) return kOutside;
    return at(i, j);
  }

  Vec2 cell_center(int i, int j) const {
    return origin_ + resolution_ * Vec2(i + 0.5, j + 0.5);
  }

  void cell_index(const Vec2& p, int& i, int& j) const {
    i = static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_));
    j = static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_));
  }

  bool contains_world(const Vec2& p) const {
    int i, j;
    cell_index(p, i, j);
    return in_bounds(i, j);
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * size_x_ + i;
  }

  inline static const CostmapCell kOutside{};

  double resolution_;
  Vec2 origin_;
  int size_x_;
  int size_y_;
  double reference_height_;
  std::vector<CostmapCell> cells_;
};

struct SectionSample {
  float height = 0.0f;
  CellClass cell_class = CellClass::Unknown;
};

namespace detail {

/// Water-fill levels: min(running max from the left, running max from the
/// right). Cells below this level form concave dips bounded by two shoulders.
inline void fill_levels(std::span<const float> h, std::vector<float>& level) {
  const std::size_t m = h.size();
  level.assign(m, 0.0f);
  float run = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    run = std::max(run, h[i]);
    level[i] = run;
  }
  run = -std::numeric_limits<float>::infinity();
  for (std::size_t i = m; i-- > 0;) {
    run = std::max(run, h[i]);
    level[i] = std::min(level[i], run);
  }
}

}  // namespace detail

/// Flags the cells of one 1D section that sit at the upper end of a
/// non-traversable height change. Unknown samples split the section into
/// independent pieces. Dips narrower than concavity_width are filled to the
/// lower of their shoulders before analysis. Every sub-span no longer than
/// section_window is tested: a discrete step (rise > max_step over <= 2
/// cells) or a continuous slope (atan(rise/run) > max_slope) flags the
/// higher endpoint of the span. Under the Traversable policy, spans ending
/// on a virtual sample are exempt.
inline std::vector<std::uint8_t> section_fatal_scan(
    std::span<const SectionSample> samples, const FatalityParams& params,
    double resolution, VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase) {
  params.validate();
  const int m = static_cast<int>(samples.size());
  std::vector<std::uint8_t> flags(samples.size(), 0);
  const int window_cells =
      std::max(1, static_cast<int>(std::lround(params.section_window / resolution)));
  const bool skip_virtual = policy == VirtualSurfacePolicy::Traversable;

  std::vector<float> heights;
  std::vector<float> level;
  int begin = 0;
  while (begin < m) {
    while (begin < m && samples[begin].cell_class == CellClass::Unknown) ++begin;
    int end = begin;
    while (end < m && samples[end].cell_class != CellClass::Unknown) ++end;
    const int len = end - begin;
    if (len >= 2) {
      heights.assign(len, 0.0f);
      for (int i = 0; i < len; ++i) heights[i] = samples[begin + i].height;

      detail::fill_levels(heights, level);
      int i = 0;
      while (i < len) {
        if (heights[i] < level[i]) {
          int j = i;
          while (j < len && heights[j] < level[j]) ++j;
          if ((j - i) * resolution < params.concavity_width) {
            for (int k = i; k < j; ++k) heights[k] = level[k];
          }
          i = j;
        } else {
          ++i;
        }
      }

      for (int a = 0; a < len; ++a) {
        const int b_max = std::min(len - 1, a + window_cells);
        for (int b = a + 1; b <= b_max; ++b) {
          if (skip_virtual && (samples[begin + a].cell_class == CellClass::Virtual ||
                               samples[begin + b].cell_class == CellClass::Virtual)) {
            continue;
          }
          const double rise = std::abs(static_cast<double>(heights[b]) - heights[a]);
          const double run = (b - a) * resolution;
          const bool step_hit = (b - a) <= 2 && rise > params.max_step;
          // The slope test starts at two-cell runs: heights are voxel
          // quantized, so any single-cell pair can read as a 45-degree jump.
          const bool slope_hit =
              (b - a) >= 2 &&
              std::atan2(std::max(0.0, rise - params.height_slack), run) > params.max_slope;
          if (step_hit || slope_hit) {
            const int upper = heights[b] >= heights[a] ? b : a;
            flags[begin + upper] = 1;
          }
        }
      }
    }
    begin = end;
  }
  return flags;
}

namespace detail {

/// Steepness test between two adjacent cells. Only the discrete step rule
/// applies at one-cell runs (voxel quantization makes slopes meaningless
/// there).
inline bool steep_pair(double h_lo, double h_hi, const FatalityParams& params,
                       double /*resolution*/) {
  return h_hi - h_lo > params.max_step;
}

template <typename FlagFn>
void scan_direction(const Heightmap& hm, double angle, const FatalityParams& params,
                    VirtualSurfacePolicy policy, FlagFn&& flag_cell) {
  const double res = hm.resolution();
  const int w = hm.size_x(), h = hm.size_y();
  std::vector<SectionSample> samples;
  std::vector<std::pair<int, int>> cells;

  auto run_line = [&]() {
    if (samples.empty()) return;
    const auto flags = section_fatal_scan(samples, params, res, policy);
    for (std::size_t s = 0; s < flags.size(); ++s) {
      if (flags[s]) flag_cell(cells[s].first, cells[s].second);
    }
    samples.clear();
    cells.clear();
  };

  if (std::abs(std::sin(angle)) < 1e-12) {
    // Axis-aligned rows: every cell sampled exactly once.
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const HeightmapCell& c = hm.at(i, j);
        samples.push_back(SectionSample{c.height, c.cell_class});
        cells.emplace_back(i, j);
      }
      run_line();
    }
    return;
  }

  const Vec2 u(std::cos(angle), std::sin(angle));
  const Vec2 n(-u.y(), u.x());
  const double W = w * res, H = h * res;
  const Vec2 corners[4] = {{0, 0}, {W, 0}, {0, H}, {W, H}};
  double c_min = std::numeric_limits<double>::infinity();
  double c_max = -c_min;
  double t_min = c_min, t_max = -c_min;
  for (const Vec2& p : corners) {
    c_min = std::min(c_min, p.dot(n));
    c_max = std::max(c_max, p.dot(n));
    t_min = std::min(t_min, p.dot(u));
    t_max = std::max(t_max, p.dot(u));
  }

  for (double c = c_min + 0.5 * res; c < c_max; c += res) {
    int last_i = -1, last_j = -1;
    for (double t = t_min + 0.5 * res; t < t_max; t += res) {
      const Vec2 p = c * n + t * u;
      const int i = static_cast<int>(std::floor(p.x() / res));
      const int j = static_cast<int>(std::floor(p.y() / res));
      if (!hm.in_bounds(i, j)) {
        run_line();
        last_i = last_j = -1;
        continue;
      }
      if (i == last_i && j == last_j) continue;
      last_i = i;
      last_j = j;
      const HeightmapCell& cell = hm.at(i, j);
      samples.push_back(SectionSample{cell.height, cell.cell_class});
      cells.emplace_back(i, j);
    }
    run_line();
  }
}

}  // namespace detail

/// Labels each heightmap cell Fatal or NonFatal. Sections in three
/// directions (0, 60, 120 degrees) are scanned independently and a cell is
/// fatal when any direction flags it; virtual cells are then reset to
/// non-fatal, and across any steep rise only the higher cell keeps its flag.
inline Costmap build_costmap(const Heightmap& hm, const FatalityParams& params,
                             VirtualSurfacePolicy policy = VirtualSurfacePolicy::BestCase) {
  params.validate();
  Costmap cm(hm.resolution(), hm.origin(), hm.size_x(), hm.size_y(),
             hm.reference_height());
  const int w = hm.size_x(), h = hm.size_y();
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const HeightmapCell& c = hm.at(i, j);
      cm.at(i, j) = CostmapCell{c.height, c.cell_class, Traversability::NonFatal};
    }
  }

  const double directions[3] = {0.0, deg_to_rad(60.0), deg_to_rad(120.0)};
  for (double angle : directions) {
    detail::scan_direction(hm, angle, params, policy, [&](int i, int j) {
      cm.at(i, j).traversability = Traversability::Fatal;
    });
  }

  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (cm.at(i, j).cell_class == CellClass::Virtual ||
          cm.at(i, j).cell_class == CellClass::Unknown) {
        cm.at(i, j).traversability = Traversability::NonFatal;
      }
    }
  }

  // Upper-edge rule: where a steep rise crosses a boundary between known
  // cells, fatality belongs to the higher cell. A lower fatal cell loses its
  // flag unless it is itself the upper side of another steep rise.
  const double res = cm.resolution();
  auto is_upper_of_some_rise = [&](int i, int j) {
    const double h0 = cm.at(i, j).height;
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int ni = i + di[k], nj = j + dj[k];
      if (!cm.in_bounds(ni, nj) || !cm.at(ni, nj).known()) continue;
      if (detail::steep_pair(cm.at(ni, nj).height, h0, params, res)) return true;
    }
    return false;
  };

  std::vector<std::pair<int, int>> to_clear;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      CostmapCell& cell = cm.at(i, j);
      if (!cell.fatal() || !cell.known()) continue;
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      bool transfer = false;
      for (int k = 0; k < 4; ++k) {
        const int ni = i + di[k], nj = j + dj[k];
        if (!cm.in_bounds(ni, nj)) continue;
        CostmapCell& nb = cm.at(ni, nj);
        if (!nb.known()) continue;
        if (nb.height > cell.height &&
            detail::steep_pair(cell.height, nb.height, params, res)) {
          transfer = true;
          if (nb.cell_class == CellClass::Real) nb.traversability = Traversability::Fatal;
        }
      }
      if (transfer && !is_upper_of_some_rise(i, j)) to_clear.emplace_back(i, j);
    }
  }
  for (const auto& [i, j] : to_clear) {
    cm.at(i, j).traversability = Traversability::NonFatal;
  }

  return cm;
}

}  // namespace vsnav
