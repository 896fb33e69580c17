#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/geometry.hpp"

namespace vsnav {

/// Ground-truth world: a dense heightfield of flat tiles plus optional
/// axis-aligned boxes for walls and overhangs.
class WorldModel {
 public:
  WorldModel(double resolution, const Vec2& origin, int size_x, int size_y)
      : resolution_(resolution), origin_(origin), size_x_(size_x), size_y_(size_y),
        heights_(static_cast<std::size_t>(size_x) * size_y, 0.0f) {
    if (resolution <= 0.0 || size_x <= 0 || size_y <= 0)
      throw std::invalid_argument("invalid heightfield dimensions");
  }

  static WorldModel from_function(double resolution, const Vec2& origin, int size_x,
                                  int size_y,
                                  const std::function<double(double, double)>& z) {
    WorldModel w(resolution, origin, size_x, size_y);
    for (int j = 0; j < size_y; ++j) {
      for (int i = 0; i < size_x; ++i) {
        const Vec2 c = w.tile_center(i, j);
        w.heights_[w.index(i, j)] = static_cast<float>(z(c.x(), c.y()));
      }
    }
    w.refresh_max_height();
    return w;
  }

  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  int size_x() const { return size_x_; }
  int size_y() const { return size_y_; }
  double max_height() const { return max_height_; }
  const std::vector<Box3>& boxes() const { return boxes_; }

  void add_box(const Box3& box) {
    if (box.degenerate()) throw std::invalid_argument("degenerate box obstacle");
    boxes_.push_back(box);
    max_height_ = std::max(max_height_, box.max.z());
  }

  Vec2 tile_center(int i, int j) const {
    return origin_ + resolution_ * Vec2(i + 0.5, j + 0.5);
  }

  /// True when the point lies within the heightfield extent; outside it the
  /// world is void (rays fly through, there is no terrain).
  bool contains(double x, double y) const {
    return x >= origin_.x() && x <= origin_.x() + size_x_ * resolution_ &&
           y >= origin_.y() && y <= origin_.y() + size_y_ * resolution_;
  }

  /// True terrain height under a world point (tiles are flat). Points
  /// outside the field clamp to the nearest edge tile.
  double ground_height(double x, double y) const {
    int i = static_cast<int>(std::floor((x - origin_.x()) / resolution_));
    int j = static_cast<int>(std::floor((y - origin_.y()) / resolution_));
    i = std::clamp(i, 0, size_x_ - 1);
    j = std::clamp(j, 0, size_y_ - 1);
    return heights_[index(i, j)];
  }

  /// Nearest intersection of a ray with the terrain surface (tile tops and
  /// the vertical faces between tiles) and any boxes. Returns the range or
  /// nullopt on miss.
  std::optional<double> cast_ray(const Vec3& origin, const Vec3& dir,
                                 double range_max) const {
    double best = range_max;
    bool hit = false;
    for (const Box3& box : boxes_) {
      double t;
      if (ray_box_hit(origin, dir, box, best, t) && t > 1e-9) {
        best = t;
        hit = true;
      }
    }
    if (cast_heightfield(origin, dir, best, best)) hit = true;
    return hit ? std::optional<double>(best) : std::nullopt;
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * size_x_ + i;
  }

  void refresh_max_height() {
    max_height_ = -std::numeric_limits<double>::infinity();
    for (float h : heights_) max_height_ = std::max(max_height_, static_cast<double>(h));
    for (const Box3& b : boxes_) max_height_ = std::max(max_height_, b.max.z());
  }

  bool cast_heightfield(const Vec3& origin, const Vec3& dir, double t_limit,
                        double& t_out) const {
    // Ascending ray already above everything can never land.
    if (dir.z() >= 0.0 && origin.z() > max_height_) return false;

    const double res = resolution_;
    const double inv_dx = dir.x() != 0.0 ? 1.0 / dir.x() : 0.0;
    const double inv_dy = dir.y() != 0.0 ? 1.0 / dir.y() : 0.0;

    int i = static_cast<int>(std::floor((origin.x() - origin_.x()) / res));
    int j = static_cast<int>(std::floor((origin.y() - origin_.y()) / res));

    // March from where the ray enters the field if it starts outside.
    double t = 0.0;
    if (i < 0 || i >= size_x_ || j < 0 || j >= size_y_) {
      const Box3 field{Vec3(origin_.x(), origin_.y(), -1e9),
                       Vec3(origin_.x() + size_x_ * res, origin_.y() + size_y_ * res, 1e9)};
      double t0 = 0.0, t1 = t_limit;
      const Vec3 end = origin + t_limit * dir;
      if (!clip_segment(origin, end, field, t0, t1)) return false;
      t = t0 * t_limit + 1e-9;
      const Vec3 p = origin + t * dir;
      i = std::clamp(static_cast<int>(std::floor((p.x() - origin_.x()) / res)), 0,
                     size_x_ - 1);
      j = std::clamp(static_cast<int>(std::floor((p.y() - origin_.y()) / res)), 0,
                     size_y_ - 1);
    }

    const int step_i = dir.x() > 0.0 ? 1 : -1;
    const int step_j = dir.y() > 0.0 ? 1 : -1;
    double t_next_x = std::numeric_limits<double>::infinity();
    double t_next_y = std::numeric_limits<double>::infinity();
    if (dir.x() != 0.0) {
      const double bx = origin_.x() + (i + (step_i > 0 ? 1 : 0)) * res;
      t_next_x = (bx - origin.x()) * inv_dx;
    }
    if (dir.y() != 0.0) {
      const double by = origin_.y() + (j + (step_j > 0 ? 1 : 0)) * res;
      t_next_y = (by - origin.y()) * inv_dy;
    }

    while (t < t_limit) {
      const double h = heights_[index(i, j)];
      const double t_exit = std::min({t_next_x, t_next_y, t_limit});
      const double z_in = origin.z() + dir.z() * t;
      const double z_out = origin.z() + dir.z() * t_exit;

      if (z_in <= h && t > 1e-9) {
        // Entered the tile below its top: the boundary face was hit.
        t_out = t;
        return true;
      }
      if (dir.z() < 0.0 && z_out <= h && z_in > h) {
        const double t_hit = (h - origin.z()) / dir.z();
        if (t_hit <= t_limit) {
          t_out = t_hit;
          return true;
        }
        return false;
      }
      if (dir.z() >= 0.0 && z_in > max_height_) return false;

      if (t_next_x < t_next_y) {
        t = t_next_x;
        t_next_x += std::abs(res * inv_dx);
        i += step_i;
        if (i < 0 || i >= size_x_) return false;
      } else {
        t = t_next_y;
        t_next_y += std::abs(res * inv_dy);
        j += step_j;
        if (j < 0 || j >= size_y_) return false;
      }
    }
    return false;
  }

  double resolution_;
  Vec2 origin_;
  int size_x_;
  int size_y_;
  std::vector<float> heights_;
  std::vector<Box3> boxes_;
  double max_height_ = 0.0;
};

// Built-in evaluation worlds, sized so the vehicle cannot reach or sense
// their edges within a run. The trench is too wide to straddle and too deep
// to enter; the ramp is a traversable descent that starts occluded; the
// cliff pairs a sheer drop with a traversable slope beside it.

inline WorldModel make_trench_world() {
  return WorldModel::from_function(0.05, Vec2(-12.0, -14.0), 640, 560,
                                   [](double x, double) {
                                     if (x >= 4.0 && x <= 7.0) return -2.0;
                                     return 0.0;
                                   });
}

inline WorldModel make_ramp_world() {
  const double slope = std::tan(deg_to_rad(20.0));
  const double depth = 1.5;
  return WorldModel::from_function(0.05, Vec2(-12.0, -14.0), 640, 560,
                                   [=](double x, double) {
                                     if (x <= 5.0) return 0.0;
                                     return std::max(-depth, -slope * (x - 5.0));
                                   });
}

inline WorldModel make_cliff_bypass_world() {
  const double slope = std::tan(deg_to_rad(30.0));
  const double depth = 2.0;
  return WorldModel::from_function(0.05, Vec2(-12.0, -14.0), 640, 560,
                                   [=](double x, double y) {
                                     if (x <= 5.0) return 0.0;
                                     if (y >= 1.0 && y <= 6.0)
                                       return std::max(-depth, -slope * (x - 5.0));
                                     return -depth;
                                   });
}

inline const std::vector<std::string>& builtin_world_names() {
  static const std::vector<std::string> names = {"trench", "ramp", "cliff_bypass"};
  return names;
}

inline std::optional<WorldModel> make_builtin_world(const std::string& name) {
  if (name == "trench") return make_trench_world();
  if (name == "ramp") return make_ramp_world();
  if (name == "cliff_bypass") return make_cliff_bypass_world();
  return std::nullopt;
}

}  // namespace vsnav
