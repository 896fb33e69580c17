#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vsnav/geometry.hpp"

namespace vsnav {

enum class VoxelState : std::uint8_t { Unobserved = 0, Free = 1, Occupied = 2 };

struct VoxelKey {
  int ix = 0;
  int iy = 0;
  int iz = 0;

  bool operator==(const VoxelKey&) const = default;
};

struct VoxelData {
  float log_odds = 0.0f;
  float last_update = 0.0f;
  // bit 0: voxel has been observed; bits 1-2: last threshold crossing
  // (0 = none, 1 = free, 2 = occupied), used only when a hysteresis band
  // is configured.
  std::uint8_t flags = 0;

  bool observed() const { return flags & 1u; }
};

struct LidarRay {
  Vec3 origin = Vec3::Zero();
  Vec3 endpoint = Vec3::Zero();
  double time = 0.0;
  bool is_return = true;
};

/// Exact incremental 3D grid traversal (Amanatides & Woo). Visits, in order,
/// every voxel the segment a->b passes through, restricted to the parametric
/// range [t_begin, t_end]. The visitor may return false to stop early.
template <typename Visitor>
void traverse_voxels(const Vec3& a, const Vec3& b, double resolution,
                     const Vec3& grid_origin, double t_begin, double t_end,
                     Visitor&& visit) {
  if (t_end <= t_begin) return;
  const Vec3 d = b - a;
  const Vec3 p0 = a + t_begin * d;

  VoxelKey key{
      static_cast<int>(std::floor((p0.x() - grid_origin.x()) / resolution)),
      static_cast<int>(std::floor((p0.y() - grid_origin.y()) / resolution)),
      static_cast<int>(std::floor((p0.z() - grid_origin.z()) / resolution))};

  int step[3];
  double t_next[3];
  double t_delta[3];
  const int idx0[3] = {key.ix, key.iy, key.iz};
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] > 0.0) {
      step[axis] = 1;
      const double boundary = grid_origin[axis] + (idx0[axis] + 1) * resolution;
      t_next[axis] = (boundary - a[axis]) / d[axis];
      t_delta[axis] = resolution / d[axis];
    } else if (d[axis] < 0.0) {
      step[axis] = -1;
      const double boundary = grid_origin[axis] + idx0[axis] * resolution;
      t_next[axis] = (boundary - a[axis]) / d[axis];
      t_delta[axis] = -resolution / d[axis];
    } else {
      step[axis] = 0;
      t_next[axis] = std::numeric_limits<double>::infinity();
      t_delta[axis] = std::numeric_limits<double>::infinity();
    }
  }

  double t = t_begin;
  while (t <= t_end) {
    if (!visit(key)) return;
    int axis = 0;
    if (t_next[1] < t_next[axis]) axis = 1;
    if (t_next[2] < t_next[axis]) axis = 2;
    t = t_next[axis];
    if (t > t_end) return;
    t_next[axis] += t_delta[axis];
    switch (axis) {
      case 0: key.ix += step[0]; break;
      case 1: key.iy += step[1]; break;
      default: key.iz += step[2]; break;
    }
  }
}

struct OccupancyMapParams {
  double resolution = 0.1;
  Vec3 origin = Vec3::Zero();  // world position of voxel (0,0,0) corner
  double hit_log_odds = 0.8472978603872037;    // p_hit = 0.7
  double miss_log_odds = -0.4054651081081645;  // p_miss = 0.4
  double min_log_odds = -2.0;
  double max_log_odds = 3.5;
  double occupied_threshold = 0.0;
  double free_threshold = 0.0;
  // Square retention window, half extents in metres.
  double window_radius_xy = 5.0;
  double window_radius_z = 3.0;
};

/// Local 3D probabilistic voxel occupancy map with chunked sparse storage
/// and a sliding retention window around the vehicle.
class OccupancyMap3D {
 public:
  using Params = OccupancyMapParams;

  struct IntegrationStats {
    std::size_t rays_integrated = 0;
    std::size_t rays_skipped_nonfinite = 0;
    std::size_t endpoints_outside_window = 0;
  };

  static constexpr int kChunkBits = 4;
  static constexpr int kChunkDim = 1 << kChunkBits;  // 16^3 voxels per chunk
  static constexpr int kChunkVoxels = kChunkDim * kChunkDim * kChunkDim;

  struct Chunk {
    std::vector<VoxelData> voxels;
    Chunk() : voxels(kChunkVoxels) {}
  };

  explicit OccupancyMap3D(Params params = Params(), const Vec3& window_center = Vec3::Zero())
      : params_(params), window_center_(window_center) {
    if (params_.resolution <= 0.0)
      throw std::invalid_argument("occupancy map resolution must be positive");
  }

  const Params& params() const { return params_; }
  double resolution() const { return params_.resolution; }
  const Vec3& origin() const { return params_.origin; }
  const Vec3& window_center() const { return window_center_; }

  VoxelKey key_at(const Vec3& p) const {
    return VoxelKey{
        static_cast<int>(std::floor((p.x() - params_.origin.x()) / params_.resolution)),
        static_cast<int>(std::floor((p.y() - params_.origin.y()) / params_.resolution)),
        static_cast<int>(std::floor((p.z() - params_.origin.z()) / params_.resolution))};
  }

  Vec3 voxel_center(const VoxelKey& k) const {
    return params_.origin + params_.resolution * Vec3(k.ix + 0.5, k.iy + 0.5, k.iz + 0.5);
  }

  /// World z of the top face of voxel layer iz.
  double voxel_top_z(int iz) const {
    return params_.origin.z() + (iz + 1) * params_.resolution;
  }
  /// World z of the bottom face of voxel layer iz.
  double voxel_bottom_z(int iz) const {
    return params_.origin.z() + iz * params_.resolution;
  }

  bool in_window(const VoxelKey& k) const {
    const Vec3 c = voxel_center(k);
    return std::abs(c.x() - window_center_.x()) <= params_.window_radius_xy &&
           std::abs(c.y() - window_center_.y()) <= params_.window_radius_xy &&
           std::abs(c.z() - window_center_.z()) <= params_.window_radius_z;
  }

  Box3 window_box() const {
    const Vec3 r(params_.window_radius_xy, params_.window_radius_xy, params_.window_radius_z);
    return Box3{window_center_ - r, window_center_ + r};
  }

  const VoxelData* find(const VoxelKey& k) const {
    const auto it = chunks_.find(chunk_key(k));
    if (it == chunks_.end()) return nullptr;
    return &it->second->voxels[voxel_index(k)];
  }

  VoxelState classify(const VoxelKey& k) const {
    const VoxelData* v = find(k);
    if (v == nullptr || !v->observed()) return VoxelState::Unobserved;
    if (v->log_odds >= params_.occupied_threshold) return VoxelState::Occupied;
    if (v->log_odds <= params_.free_threshold) return VoxelState::Free;
    const std::uint8_t crossing = (v->flags >> 1) & 3u;
    if (crossing == 1) return VoxelState::Free;
    if (crossing == 2) return VoxelState::Occupied;
    return VoxelState::Unobserved;
  }

  /// Integrates one sensor batch. Hits take priority within a batch: a voxel
  /// holding any ray endpoint never receives miss updates from the same
  /// batch, which stops grazing rays from eroding the surfaces they return
  /// from.
  IntegrationStats integrate_rays(std::span<const LidarRay> rays) {
    IntegrationStats stats;
    const Box3 window = window_box();

    batch_endpoints_.clear();
    for (const LidarRay& ray : rays) {
      if (!ray_finite(ray)) continue;
      const VoxelKey k = key_at(ray.endpoint);
      if (in_window(k)) batch_endpoints_.insert(pack_chunk_key(k.ix, k.iy, k.iz));
    }

    for (const LidarRay& ray : rays) {
      if (!ray_finite(ray)) {
        ++stats.rays_skipped_nonfinite;
        continue;
      }
      double t0 = 0.0, t1 = 1.0;
      if (!clip_segment(ray.origin, ray.endpoint, window, t0, t1)) {
        ++stats.rays_integrated;  // entirely outside: a no-op, not an error
        continue;
      }
      const VoxelKey end_key = key_at(ray.endpoint);
      bool endpoint_hit = false;
      traverse_voxels(ray.origin, ray.endpoint, params_.resolution, params_.origin,
                      t0, t1, [&](const VoxelKey& k) {
                        if (k == end_key) {
                          endpoint_hit = true;
                          return false;  // the endpoint voxel never gets a miss
                        }
                        if (in_window(k) && !is_batch_endpoint(k)) {
                          apply_update(k, params_.miss_log_odds, ray.time);
                        }
                        return true;
                      });
      if (endpoint_hit && in_window(end_key)) {
        apply_update(end_key, params_.hit_log_odds, ray.time);
      } else if (!endpoint_hit) {
        ++stats.endpoints_outside_window;
      }
      ++stats.rays_integrated;
    }
    return stats;
  }

  /// Direct single-voxel updates, used by tests and synthetic map builders.
  void update_hit(const VoxelKey& k, double time = 0.0) {
    apply_update(k, params_.hit_log_odds, time);
  }
  void update_miss(const VoxelKey& k, double time = 0.0) {
    apply_update(k, params_.miss_log_odds, time);
  }
  void set_log_odds(const VoxelKey& k, double value, double time = 0.0) {
    VoxelData& v = upsert(k);
    v.log_odds = static_cast<float>(
        std::clamp(value, params_.min_log_odds, params_.max_log_odds));
    v.last_update = static_cast<float>(time);
    v.flags |= 1u;
    note_crossing(v);
  }

  /// Moves the retention window. Chunks entirely outside the new window are
  /// dropped; chunks intersecting it are kept whole, so nearby evidence
  /// (within one chunk span of the boundary) survives the move.
  void crop_to_window(const Vec3& new_center) {
    window_center_ = new_center;
    cached_key_ = ~0ull;
    cached_chunk_ = nullptr;
    const Box3 window = window_box();
    for (auto it = chunks_.begin(); it != chunks_.end();) {
      if (!chunk_intersects(it->first, window)) {
        it = chunks_.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::size_t chunk_count() const { return chunks_.size(); }

  std::size_t observed_voxel_count() const {
    std::size_t n = 0;
    for_each_voxel([&](const VoxelKey&, const VoxelData&) { ++n; });
    return n;
  }

  /// Visits every observed voxel. Iteration order is unspecified; callers
  /// needing stable output must sort by key.
  template <typename Fn>
  void for_each_voxel(Fn&& fn) const {
    for (const auto& [ckey, chunk] : chunks_) {
      int cx, cy, cz;
      unpack_chunk_key(ckey, cx, cy, cz);
      for (int i = 0; i < kChunkVoxels; ++i) {
        const VoxelData& v = chunk->voxels[i];
        if (!v.observed()) continue;
        const int lx = i & (kChunkDim - 1);
        const int ly = (i >> kChunkBits) & (kChunkDim - 1);
        const int lz = i >> (2 * kChunkBits);
        fn(VoxelKey{cx * kChunkDim + lx, cy * kChunkDim + ly, cz * kChunkDim + lz}, v);
      }
    }
  }

 private:
  static bool ray_finite(const LidarRay& r) {
    return r.origin.allFinite() && r.endpoint.allFinite() &&
           (r.origin - r.endpoint).squaredNorm() > 0.0;
  }

  static std::uint64_t pack_chunk_key(int cx, int cy, int cz) {
    constexpr std::uint64_t bias = 1u << 20;
    return ((static_cast<std::uint64_t>(cx + bias) & 0x1FFFFF) << 42) |
           ((static_cast<std::uint64_t>(cy + bias) & 0x1FFFFF) << 21) |
           (static_cast<std::uint64_t>(cz + bias) & 0x1FFFFF);
  }

  static void unpack_chunk_key(std::uint64_t key, int& cx, int& cy, int& cz) {
    constexpr int bias = 1 << 20;
    cx = static_cast<int>((key >> 42) & 0x1FFFFF) - bias;
    cy = static_cast<int>((key >> 21) & 0x1FFFFF) - bias;
    cz = static_cast<int>(key & 0x1FFFFF) - bias;
  }

  static int floor_div(int a, int b) {
    return (a >= 0) ? a / b : -((-a + b - 1) / b);
  }

  std::uint64_t chunk_key(const VoxelKey& k) const {
    return pack_chunk_key(floor_div(k.ix, kChunkDim), floor_div(k.iy, kChunkDim),
                          floor_div(k.iz, kChunkDim));
  }

  int voxel_index(const VoxelKey& k) const {
    const int lx = k.ix & (kChunkDim - 1);
    const int ly = k.iy & (kChunkDim - 1);
    const int lz = k.iz & (kChunkDim - 1);
    return (lz << (2 * kChunkBits)) | (ly << kChunkBits) | lx;
  }

  bool chunk_intersects(std::uint64_t ckey, const Box3& box) const {
    int cx, cy, cz;
    unpack_chunk_key(ckey, cx, cy, cz);
    const double span = kChunkDim * params_.resolution;
    const Vec3 lo = params_.origin + span * Vec3(cx, cy, cz);
    const Vec3 hi = lo + Vec3(span, span, span);
    return lo.x() <= box.max.x() && hi.x() >= box.min.x() &&
           lo.y() <= box.max.y() && hi.y() >= box.min.y() &&
           lo.z() <= box.max.z() && hi.z() >= box.min.z();
  }

  VoxelData& upsert(const VoxelKey& k) {
    const std::uint64_t ckey = chunk_key(k);
    if (ckey == cached_key_ && cached_chunk_ != nullptr) {
      return cached_chunk_->voxels[voxel_index(k)];
    }
    auto& slot = chunks_[ckey];
    if (!slot) slot = std::make_unique<Chunk>();
    cached_key_ = ckey;
    cached_chunk_ = slot.get();
    return slot->voxels[voxel_index(k)];
  }

  void apply_update(const VoxelKey& k, double delta, double time) {
    VoxelData& v = upsert(k);
    v.log_odds = static_cast<float>(std::clamp(
        static_cast<double>(v.log_odds) + delta, params_.min_log_odds, params_.max_log_odds));
    v.last_update = static_cast<float>(time);
    v.flags |= 1u;
    note_crossing(v);
  }

  void note_crossing(VoxelData& v) const {
    if (v.log_odds >= params_.occupied_threshold) {
      v.flags = static_cast<std::uint8_t>((v.flags & ~0x6u) | (2u << 1));
    } else if (v.log_odds <= params_.free_threshold) {
      v.flags = static_cast<std::uint8_t>((v.flags & ~0x6u) | (1u << 1));
    }
  }

  bool is_batch_endpoint(const VoxelKey& k) const {
    return batch_endpoints_.count(pack_chunk_key(k.ix, k.iy, k.iz)) > 0;
  }

  Params params_;
  Vec3 window_center_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Chunk>> chunks_;
  std::unordered_set<std::uint64_t> batch_endpoints_;
  std::uint64_t cached_key_ = ~0ull;
  Chunk* cached_chunk_ = nullptr;
};

}  // namespace vsnav
