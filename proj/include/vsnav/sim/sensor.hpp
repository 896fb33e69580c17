#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vsnav/occupancy_map.hpp"
#include "vsnav/sim/world.hpp"

namespace vsnav {

/// Spinning multi-beam lidar on a tilted, slowly rotating mount, placed
/// toward the front of the vehicle for downward visibility ahead.
struct SensorModel {
  int channels = 16;
  double elevation_min = deg_to_rad(-15.0);
  double elevation_max = deg_to_rad(15.0);
  double mount_tilt = deg_to_rad(30.0);  // nose-down tilt of the spin axis
  double spin_hz = 10.0;                 // internal scan rate
  double mount_hz = 0.5;                 // mount rotation rate
  double points_per_second = 30000.0;    // desk-scale rate
  double range_min = 0.4;
  double range_max = 15.0;
  double noise_sigma = 0.005;  // 2 sigma stays inside half a voxel
  Vec3 mount_offset = Vec3(0.25, 0.0, 0.7);  // vehicle frame

  void validate() const {
    if (channels < 1 || spin_hz <= 0.0 || mount_hz <= 0.0 || points_per_second <= 0.0)
      throw std::invalid_argument("sensor rates must be positive");
    if (range_min >= range_max)
      throw std::invalid_argument("sensor range_min must be below range_max");
  }
};

struct SensorFramePose {
  Vec3 position = Vec3::Zero();  // vehicle origin in world
  Mat3 rotation = Mat3::Identity();
};

/// Beam direction in the vehicle frame for a given mount angle, spin angle
/// and channel elevation.
inline Vec3 beam_direction(const SensorModel& sm, double mount_angle,
                           double spin_angle, double elevation) {
  const Vec3 d(std::cos(elevation) * std::cos(spin_angle),
               std::cos(elevation) * std::sin(spin_angle), std::sin(elevation));
  return rot_z(mount_angle) * rot_y(sm.mount_tilt) * d;
}

/// Emits the rays fired over [t0, t1). Beams continuously advance the spin
/// and mount angles; beams blocked by the vehicle's own body and beams with
/// no terrain return are dropped, mirroring a driver that cannot report
/// non-returns. Range noise is drawn from the seeded stream per beam.
inline std::vector<LidarRay> raycast_scan(const WorldModel& world,
                                          const SensorFramePose& vehicle, double t0,
                                          double t1, const SensorModel& sm,
                                          const Box3& body_box, RandomStream& rng) {
  sm.validate();
  if (t1 <= t0) throw std::invalid_argument("raycast interval is empty");
  std::vector<LidarRay> rays;
  const std::size_t n =
      static_cast<std::size_t>(std::floor((t1 - t0) * sm.points_per_second));
  rays.reserve(n);

  const double elev_step =
      sm.channels > 1 ? (sm.elevation_max - sm.elevation_min) / (sm.channels - 1) : 0.0;
  const Vec3 origin_world = vehicle.position + vehicle.rotation * sm.mount_offset;

  for (std::size_t i = 0; i < n; ++i) {
    const double tau = t0 + (static_cast<double>(i) + 0.5) / sm.points_per_second;
    const int channel = static_cast<int>(i % sm.channels);
    const double elevation = sm.elevation_min + channel * elev_step;
    const double spin = 2.0 * kPi * sm.spin_hz * tau;
    const double mount = 2.0 * kPi * sm.mount_hz * tau;

    const Vec3 dir_vehicle = beam_direction(sm, mount, spin, elevation);

    double t_body;
    if (ray_box_hit(sm.mount_offset, dir_vehicle, body_box, sm.range_max, t_body)) {
      continue;  // self-occlusion
    }

    const Vec3 dir_world = vehicle.rotation * dir_vehicle;
    const auto range = world.cast_ray(origin_world, dir_world, sm.range_max);
    if (!range || *range < sm.range_min) continue;

    const double noisy = std::max(0.5 * sm.range_min, *range + rng.gaussian(sm.noise_sigma));
    rays.push_back(LidarRay{origin_world, origin_world + noisy * dir_world, tau, true});
  }
  return rays;
}

}  // namespace vsnav
