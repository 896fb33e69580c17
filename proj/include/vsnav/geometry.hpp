#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace vsnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Normalizes an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

// Frame convention: x forward, y left, z up.
// pitch > 0 means the nose points up; roll > 0 means the left side is up.
inline Mat3 body_rotation(double yaw, double pitch, double roll) {
  return rot_z(yaw) * rot_y(-pitch) * rot_x(roll);
}

struct Box3 {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y() && p.z() >= min.z() && p.z() <= max.z();
  }
  bool degenerate() const {
    return min.x() >= max.x() || min.y() >= max.y() || min.z() >= max.z();
  }
};

/// Clips the parametric range [t0, t1] of segment a + t*(b-a) against a box.
/// Returns false when the segment misses the box entirely.
inline bool clip_segment(const Vec3& a, const Vec3& b, const Box3& box,
                         double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = b[axis] - a[axis];
    if (std::abs(d) < 1e-15) {
      if (a[axis] < box.min[axis] || a[axis] > box.max[axis]) return false;
      continue;
    }
    double lo = (box.min[axis] - a[axis]) / d;
    double hi = (box.max[axis] - a[axis]) / d;
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  return true;
}

/// First positive hit of a ray against a box (slab test); returns false on miss.
inline bool ray_box_hit(const Vec3& origin, const Vec3& dir, const Box3& box,
                        double t_max, double& t_hit) {
  double t0 = 0.0, t1 = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = dir[axis];
    if (std::abs(d) < 1e-15) {
      if (origin[axis] < box.min[axis] || origin[axis] > box.max[axis]) return false;
      continue;
    }
    double lo = (box.min[axis] - origin[axis]) / d;
    double hi = (box.max[axis] - origin[axis]) / d;
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  t_hit = t0;
  return t_hit >= 0.0 && t_hit <= t_max;
}

/// Deterministic seeded random stream used everywhere randomness is needed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian(double sigma) { return sigma == 0.0 ? 0.0 : sigma * normal_(engine_); }
  std::uint64_t integer() { return engine_(); }
  int integer(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vsnav
