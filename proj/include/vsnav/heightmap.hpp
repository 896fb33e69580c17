#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vsnav/occupancy_map.hpp"

namespace vsnav {

enum class CellClass : std::uint8_t { Real = 0, Virtual = 1, Unknown = 2 };

struct HeightmapCell {
  float height = std::numeric_limits<float>::quiet_NaN();
  CellClass cell_class = CellClass::Unknown;

  bool known() const { return cell_class != CellClass::Unknown; }
};

struct ColumnScanParams {
  int clearance_voxels = 7;   // ceil(vehicle height / resolution) + 2
  double search_low = -3.0;   // relative to reference height
  double search_high = 1.5;

  void validate() const {
    if (clearance_voxels < 1)
      throw std::invalid_argument("clearance_voxels must be >= 1");
    if (search_low >= search_high)
      throw std::invalid_argument("column search range is empty");
  }
};

/// 2.5D grid of per-column surface estimates. Cell (0,0) covers the voxel
/// column whose x/y indices in the source map are (index_x0, index_y0).
class Heightmap {
 public:
  Heightmap(double resolution, const Vec2& origin, int size_x, int size_y,
            double reference_height, int index_x0 = 0, int index_y0 = 0)
      : resolution_(resolution), origin_(origin), size_x_(size_x), size_y_(size_y),
        reference_height_(reference_height), index_x0_(index_x0), index_y0_(index_y0),
        cells_(static_cast<std::size_t>(size_x) * size_y) {}

  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  int size_x() const { return size_x_; }
  int size_y() const { return size_y_; }
  double reference_height() const { return reference_height_; }
  int index_x0() const { return index_x0_; }
  int index_y0() const { return index_y0_; }

  bool in_bounds(int i, int j) const {
    return i >= 0 && i < size_x_ && j >= 0 && j < size_y_;
  }

  HeightmapCell& at(int i, int j) { return cells_[index(i, j)]; }
  const HeightmapCell& at(int i, int j) const { return cells_[index(i, j)]; }

  Vec2 cell_center(int i, int j) const {
    return origin_ + resolution_ * Vec2(i + 0.5, j + 0.5);
  }

  /// Grid indices of the cell containing a world point; may be out of bounds.
  void cell_index(const Vec2& p, int& i, int& j) const {
    i = static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_));
    j = static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_));
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * size_x_ + i;
  }

  double resolution_;
  Vec2 origin_;
  int size_x_;
  int size_y_;
  double reference_height_;
  int index_x0_;
  int index_y0_;
  std::vector<HeightmapCell> cells_;
};

/// Scans one vertical column of voxel states, bottom to top. states[i] is the
/// voxel at z-index base_iz + i; voxels outside the span count as Unobserved.
///
/// Occupied voxels inside the search range are surface candidates; a candidate
/// survives only with clearance_voxels consecutive free-or-unobserved voxels
/// directly above it. If any survive, the cell is Real at the survivor whose
/// top face lies nearest the reference height (ties to the lower one).
/// Otherwise free voxels sitting directly on an unobserved voxel are virtual
/// candidates under the same clearance rule, and the cell is Virtual at the
/// free/unobserved interface. With no candidates at all the cell is Unknown.
inline HeightmapCell scan_column(std::span<const VoxelState> states, int base_iz,
                                 double origin_z, double resolution,
                                 double reference_height,
                                 const ColumnScanParams& params) {
  const int n = static_cast<int>(states.size());
  auto state_at = [&](int offset) {
    return (offset >= 0 && offset < n) ? states[offset] : VoxelState::Unobserved;
  };
  auto has_clearance = [&](int offset) {
    for (int k = 1; k <= params.clearance_voxels; ++k) {
      if (state_at(offset + k) == VoxelState::Occupied) return false;
    }
    return true;
  };

  const double lo = reference_height + params.search_low;
  const double hi = reference_height + params.search_high;

  HeightmapCell best;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](double surface_z, CellClass cls) {
    const double dist = std::abs(surface_z - reference_height);
    // Strictly-better keeps the first (lower) candidate on ties.
    if (dist < best_dist) {
      best_dist = dist;
      best.height = static_cast<float>(surface_z);
      best.cell_class = cls;
    }
  };

  for (int i = 0; i < n; ++i) {
    if (states[i] != VoxelState::Occupied) continue;
    const double surface_z = origin_z + (base_iz + i + 1) * resolution;
    if (surface_z < lo || surface_z > hi) continue;
    if (!has_clearance(i)) continue;
    consider(surface_z, CellClass::Real);
  }
  if (best.cell_class == CellClass::Real) return best;

  for (int i = 0; i < n; ++i) {
    if (states[i] != VoxelState::Free) continue;
    if (state_at(i - 1) != VoxelState::Unobserved) continue;
    const double surface_z = origin_z + (base_iz + i) * resolution;
    if (surface_z < lo || surface_z > hi) continue;
    if (!has_clearance(i)) continue;
    consider(surface_z, CellClass::Virtual);
  }
  return best;
}

/// Rectangular region of voxel columns, in map grid indices.
struct ColumnRegion {
  int ix0 = 0;
  int iy0 = 0;
  int size_x = 0;
  int size_y = 0;
};

/// Region centred on a world point, snapped to the voxel grid.
inline ColumnRegion centered_region(const OccupancyMap3D& map, const Vec2& center,
                                    double half_extent) {
  const double res = map.resolution();
  const int cells = 2 * static_cast<int>(std::floor(half_extent / res));
  const VoxelKey k = map.key_at(Vec3(center.x(), center.y(), 0.0));
  return ColumnRegion{k.ix - cells / 2, k.iy - cells / 2, cells, cells};
}

/// Collapses the occupancy map into a heightmap over the given column region.
/// Throws std::invalid_argument when the region pokes outside the map window.
inline Heightmap extract_heightmap(const OccupancyMap3D& map, const ColumnRegion& region,
                                   double reference_height, const ColumnScanParams& params) {
  params.validate();
  if (region.size_x <= 0 || region.size_y <= 0)
    throw std::invalid_argument("heightmap region is empty");

  const double res = map.resolution();
  const Box3 window = map.window_box();
  const Vec2 region_min(map.origin().x() + region.ix0 * res,
                        map.origin().y() + region.iy0 * res);
  const Vec2 region_max = region_min + res * Vec2(region.size_x, region.size_y);
  constexpr double kSlack = 1e-9;
  if (region_min.x() < window.min.x() - kSlack || region_min.y() < window.min.y() - kSlack ||
      region_max.x() > window.max.x() + kSlack || region_max.y() > window.max.y() + kSlack) {
    throw std::invalid_argument("heightmap region outside the map window");
  }

  // Column span: one voxel below the search range (virtual candidates need
  // their lower neighbour) up through the clearance headroom above it.
  const double lo_z = reference_height + params.search_low;
  const double hi_z = reference_height + params.search_high;
  const int iz_low =
      static_cast<int>(std::floor((lo_z - map.origin().z()) / res)) - 1;
  const int iz_high =
      static_cast<int>(std::floor((hi_z - map.origin().z()) / res)) + params.clearance_voxels;
  const int span = iz_high - iz_low + 1;

  Heightmap hm(res, region_min, region.size_x, region.size_y, reference_height,
               region.ix0, region.iy0);
  std::vector<VoxelState> column(static_cast<std::size_t>(span));
  for (int j = 0; j < region.size_y; ++j) {
    for (int i = 0; i < region.size_x; ++i) {
      const int ix = region.ix0 + i;
      const int iy = region.iy0 + j;
      for (int s = 0; s < span; ++s) {
        column[s] = map.classify(VoxelKey{ix, iy, iz_low + s});
      }
      hm.at(i, j) = scan_column(column, iz_low, map.origin().z(), res,
                                reference_height, params);
    }
  }
  return hm;
}

}  // namespace vsnav
