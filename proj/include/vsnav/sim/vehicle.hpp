#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "vsnav/behaviours.hpp"
#include "vsnav/sim/world.hpp"

namespace vsnav {

/// Simulation-side vehicle properties beyond the planner-facing geometry.
struct VehicleBody {
  double body_height = 0.45;
  double tip_limit = deg_to_rad(55.0);
  double min_support = 0.5;      // fraction of footprint that must rest on ground
  double drop_tolerance = 0.3;   // ground this far under the hull still supports

  Box3 body_box(const VehicleParams& vp) const {
    return Box3{Vec3(-0.5 * vp.length, -0.5 * vp.width, 0.0),
                Vec3(0.5 * vp.length, 0.5 * vp.width, body_height)};
  }
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double z = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool fallen = false;

  Configuration config() const { return Configuration{x, y, yaw}; }
  Vec3 position() const { return Vec3(x, y, z); }
  Mat3 rotation() const { return body_rotation(yaw, pitch, roll); }
};

namespace detail {

constexpr int kSupportNx = 5;
constexpr int kSupportNy = 3;

/// Hull attitude from ground contact. The hull rests on the highest support
/// in each half of the footprint (fore/aft for pitch, left/right for roll),
/// so corners hanging over an edge do not tip the vehicle until the support
/// under the body is actually gone.
inline void settle_on_terrain(const WorldModel& world, const VehicleParams& vp,
                              VehicleState& s) {
  const double cy = std::cos(s.yaw), sy = std::sin(s.yaw);
  double gz[kSupportNx][kSupportNy];
  double lxs[kSupportNx], lys[kSupportNy];
  for (int ix = 0; ix < kSupportNx; ++ix)
    lxs[ix] = (-0.5 + static_cast<double>(ix) / (kSupportNx - 1)) * vp.length;
  for (int iy = 0; iy < kSupportNy; ++iy)
    lys[iy] = (-0.5 + static_cast<double>(iy) / (kSupportNy - 1)) * vp.width;
  for (int ix = 0; ix < kSupportNx; ++ix) {
    for (int iy = 0; iy < kSupportNy; ++iy) {
      const double wx = s.x + cy * lxs[ix] - sy * lys[iy];
      const double wy = s.y + sy * lxs[ix] + cy * lys[iy];
      gz[ix][iy] = world.ground_height(wx, wy);
    }
  }

  // Highest support in the front and rear halves (argmax with its lever).
  double front_z = -1e18, front_lx = 0.25 * vp.length;
  double rear_z = -1e18, rear_lx = -0.25 * vp.length;
  double left_z = -1e18, left_ly = 0.25 * vp.width;
  double right_z = -1e18, right_ly = -0.25 * vp.width;
  // Halves share the centre line, so the hull pivots at the centre of
  // support rather than tipping while the centre still rests on ground.
  for (int ix = 0; ix < kSupportNx; ++ix) {
    for (int iy = 0; iy < kSupportNy; ++iy) {
      const double g = gz[ix][iy];
      if (lxs[ix] > -1e-9 && g > front_z) { front_z = g; front_lx = lxs[ix]; }
      if (lxs[ix] < 1e-9 && g > rear_z) { rear_z = g; rear_lx = lxs[ix]; }
      if (lys[iy] > -1e-9 && g > left_z) { left_z = g; left_ly = lys[iy]; }
      if (lys[iy] < 1e-9 && g > right_z) { right_z = g; right_ly = lys[iy]; }
    }
  }
  const double pitch = std::abs(front_lx - rear_lx) < 1e-9
                           ? 0.0
                           : std::atan2(front_z - rear_z, front_lx - rear_lx);
  const double roll = std::abs(left_ly - right_ly) < 1e-9
                          ? 0.0
                          : std::atan2(left_z - right_z, left_ly - right_ly);

  // Rest the hull on its highest contact point under that attitude.
  const double tp = std::tan(pitch), tr = std::tan(roll);
  double z = -1e18;
  for (int ix = 0; ix < kSupportNx; ++ix)
    for (int iy = 0; iy < kSupportNy; ++iy)
      z = std::max(z, gz[ix][iy] - tp * lxs[ix] - tr * lys[iy]);

  s.z = z;
  s.pitch = pitch;
  s.roll = roll;
}

}  // namespace detail

/// Integrates one control step of differential kinematics, settles the hull
/// onto the terrain, and applies the fall rule: the vehicle is lost when
/// less than min_support of its footprint rests on ground within the drop
/// tolerance, or its attitude passes the tip-over limit.
inline VehicleState step_vehicle(const WorldModel& world, const VehicleParams& vp,
                                 const VehicleBody& body, const VehicleState& state,
                                 double dt, const VelocityCommand& cmd) {
  if (dt <= 0.0 || dt > 0.1 + 1e-9)
    throw std::invalid_argument("step dt must be in (0, 0.1]");
  VehicleState s = state;
  if (s.fallen) return s;

  const double v = cmd.linear, w = cmd.angular;
  if (std::abs(w) < 1e-9) {
    s.x += v * dt * std::cos(s.yaw);
    s.y += v * dt * std::sin(s.yaw);
  } else {
    const double r = v / w;
    s.x += r * (std::sin(s.yaw + w * dt) - std::sin(s.yaw));
    s.y -= r * (std::cos(s.yaw + w * dt) - std::cos(s.yaw));
  }
  s.yaw = wrap_angle(s.yaw + w * dt);

  detail::settle_on_terrain(world, vp, s);

  if (std::abs(s.pitch) > body.tip_limit || std::abs(s.roll) > body.tip_limit) {
    s.fallen = true;
    return s;
  }

  // Support fraction over the footprint sample grid, against the hull plane.
  const double cy = std::cos(s.yaw), sy = std::sin(s.yaw);
  const double ta = std::tan(s.pitch), tb = std::tan(s.roll);
  int supported = 0;
  for (int iy = 0; iy < detail::kSupportNy; ++iy) {
    for (int ix = 0; ix < detail::kSupportNx; ++ix) {
      const double lx =
          (-0.5 + static_cast<double>(ix) / (detail::kSupportNx - 1)) * vp.length;
      const double ly =
          (-0.5 + static_cast<double>(iy) / (detail::kSupportNy - 1)) * vp.width;
      const double wx = s.x + cy * lx - sy * ly;
      const double wy = s.y + sy * lx + cy * ly;
      const double hull_z = s.z + ta * lx + tb * ly;
      if (world.ground_height(wx, wy) >= hull_z - body.drop_tolerance) ++supported;
    }
  }
  if (static_cast<double>(supported) / (detail::kSupportNx * detail::kSupportNy) <
      body.min_support) {
    s.fallen = true;
  }
  return s;
}

/// Initial settled state for a planar start pose.
inline VehicleState settled_state(const WorldModel& world, const VehicleParams& vp,
                                  const Configuration& start) {
  VehicleState s;
  s.x = start.x;
  s.y = start.y;
  s.yaw = start.yaw;
  detail::settle_on_terrain(world, vp, s);
  return s;
}

}  // namespace vsnav
