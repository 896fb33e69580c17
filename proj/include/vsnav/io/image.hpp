#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/costmap.hpp"
#include "vsnav/planner.hpp"

namespace vsnav {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Costmap snapshot palette: green = real and possibly traversable,
// magenta = fatal, orange = virtual, black = unknown.
inline constexpr Rgb kColorRealNonFatal{60, 170, 60};
inline constexpr Rgb kColorFatal{210, 40, 170};
inline constexpr Rgb kColorVirtual{245, 150, 40};
inline constexpr Rgb kColorUnknown{0, 0, 0};
inline constexpr Rgb kColorPath{250, 230, 40};
inline constexpr Rgb kColorFootprint{240, 240, 240};
inline constexpr Rgb kColorGoal{150, 150, 150};

class Image {
 public:
  Image(int width, int height, Rgb fill = {})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  void set(int x, int y, Rgb c) {
    if (in_bounds(x, y)) at(x, y) = c;
  }

  void write_ppm(std::ostream& os) const {
    os << "P6\n" << width_ << " " << height_ << "\n255\n";
    for (const Rgb& p : pixels_) {
      os.put(static_cast<char>(p.r));
      os.put(static_cast<char>(p.g));
      os.put(static_cast<char>(p.b));
    }
  }

  void save_ppm(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write image: " + path);
    write_ppm(f);
  }

 private:
  int width_;
  int height_;
  std::vector<Rgb> pixels_;
};

struct SnapshotOverlays {
  const PlanResult* plan = nullptr;
  const Configuration* robot = nullptr;
  const VehicleParams* vehicle = nullptr;
  const Vec2* goal = nullptr;
  double goal_radius = 0.5;
};

/// Renders a costmap (and optional robot/goal/path overlays) with the fixed
/// palette. Image y increases downward, so world +y points up.
inline Image render_costmap(const Costmap& cm, const SnapshotOverlays& overlays = SnapshotOverlays(),
                            int pixels_per_cell = 4) {
  const int w = cm.size_x() * pixels_per_cell;
  const int h = cm.size_y() * pixels_per_cell;
  Image img(w, h, kColorUnknown);

  auto to_px = [&](const Vec2& p, int& x, int& y) {
    x = static_cast<int>(std::floor((p.x() - cm.origin().x()) / cm.resolution() *
                                    pixels_per_cell));
    y = h - 1 - static_cast<int>(std::floor((p.y() - cm.origin().y()) /
                                            cm.resolution() * pixels_per_cell));
  };

  for (int j = 0; j < cm.size_y(); ++j) {
    for (int i = 0; i < cm.size_x(); ++i) {
      const CostmapCell& cell = cm.at(i, j);
      Rgb color = kColorUnknown;
      if (cell.fatal()) {
        color = kColorFatal;
      } else if (cell.cell_class == CellClass::Virtual) {
        color = kColorVirtual;
      } else if (cell.cell_class == CellClass::Real) {
        color = kColorRealNonFatal;
      }
      for (int py = 0; py < pixels_per_cell; ++py) {
        for (int px = 0; px < pixels_per_cell; ++px) {
          img.set(i * pixels_per_cell + px, h - 1 - (j * pixels_per_cell + py), color);
        }
      }
    }
  }

  auto draw_line = [&](const Vec2& a, const Vec2& b, Rgb color) {
    int x0, y0, x1, y1;
    to_px(a, x0, y0);
    to_px(b, x1, y1);
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const double f = static_cast<double>(s) / steps;
      img.set(static_cast<int>(std::lround(x0 + f * (x1 - x0))),
              static_cast<int>(std::lround(y0 + f * (y1 - y0))), color);
    }
  };

  if (overlays.goal != nullptr) {
    int cx, cy;
    to_px(*overlays.goal, cx, cy);
    const int r = std::max(1, static_cast<int>(std::lround(
                                  overlays.goal_radius / cm.resolution() * pixels_per_cell)));
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy <= r * r) img.set(cx + dx, cy + dy, kColorGoal);
      }
    }
  }

  if (overlays.plan != nullptr && overlays.plan->path.size() > 1) {
    for (std::size_t i = 1; i < overlays.plan->path.size(); ++i) {
      draw_line(overlays.plan->path[i - 1].config.position(),
                overlays.plan->path[i].config.position(), kColorPath);
    }
  }

  if (overlays.robot != nullptr && overlays.vehicle != nullptr) {
    const Configuration& c = *overlays.robot;
    const double hl = 0.5 * overlays.vehicle->length;
    const double hw = 0.5 * overlays.vehicle->width;
    const double cy = std::cos(c.yaw), sy = std::sin(c.yaw);
    auto corner = [&](double lx, double ly) {
      return Vec2(c.x + cy * lx - sy * ly, c.y + sy * lx + cy * ly);
    };
    const Vec2 p0 = corner(hl, hw), p1 = corner(hl, -hw), p2 = corner(-hl, -hw),
               p3 = corner(-hl, hw);
    draw_line(p0, p1, kColorFootprint);
    draw_line(p1, p2, kColorFootprint);
    draw_line(p2, p3, kColorFootprint);
    draw_line(p3, p0, kColorFootprint);
  }

  return img;
}

}  // namespace vsnav
