#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/occupancy_map.hpp"

namespace vsnav {

// Occupancy map dump, format "vsnav-map 1": a header with resolution, origin
// and window, then one "ix iy iz log_odds" line per observed voxel, sorted by
// key so identical maps serialize byte-identically.

inline void write_map_dump(const OccupancyMap3D& map, std::ostream& os) {
  char buf[128];
  os << "vsnav-map 1\n";
  std::snprintf(buf, sizeof buf, "resolution %.9g\n", map.resolution());
  os << buf;
  std::snprintf(buf, sizeof buf, "origin %.9g %.9g %.9g\n", map.origin().x(),
                map.origin().y(), map.origin().z());
  os << buf;
  std::snprintf(buf, sizeof buf, "window %.9g %.9g %.9g %.9g %.9g\n",
                map.window_center().x(), map.window_center().y(),
                map.window_center().z(), map.params().window_radius_xy,
                map.params().window_radius_z);
  os << buf;

  struct Record {
    VoxelKey key;
    float log_odds;
  };
  std::vector<Record> records;
  map.for_each_voxel([&](const VoxelKey& k, const VoxelData& v) {
    records.push_back(Record{k, v.log_odds});
  });
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    if (a.key.ix != b.key.ix) return a.key.ix < b.key.ix;
    if (a.key.iy != b.key.iy) return a.key.iy < b.key.iy;
    return a.key.iz < b.key.iz;
  });

  os << "voxels " << records.size() << "\n";
  for (const Record& r : records) {
    std::snprintf(buf, sizeof buf, "%d %d %d %.9g\n", r.key.ix, r.key.iy, r.key.iz,
                  static_cast<double>(r.log_odds));
    os << buf;
  }
}

inline OccupancyMap3D read_map_dump(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vsnav-map" || version != 1)
    throw std::runtime_error("not a vsnav-map dump");

  OccupancyMap3D::Params params;
  Vec3 window_center = Vec3::Zero();
  std::string key;
  is >> key;
  if (key != "resolution" || !(is >> params.resolution))
    throw std::runtime_error("map dump: bad resolution line");
  is >> key;
  if (key != "origin" ||
      !(is >> params.origin.x() >> params.origin.y() >> params.origin.z()))
    throw std::runtime_error("map dump: bad origin line");
  is >> key;
  if (key != "window" ||
      !(is >> window_center.x() >> window_center.y() >> window_center.z() >>
        params.window_radius_xy >> params.window_radius_z))
    throw std::runtime_error("map dump: bad window line");
  std::size_t count = 0;
  is >> key;
  if (key != "voxels" || !(is >> count))
    throw std::runtime_error("map dump: bad voxel count line");

  OccupancyMap3D map(params, window_center);
  for (std::size_t i = 0; i < count; ++i) {
    VoxelKey k;
    double lo;
    if (!(is >> k.ix >> k.iy >> k.iz >> lo))
      throw std::runtime_error("map dump: truncated voxel records");
    map.set_log_odds(k, lo);
  }
  return map;
}

inline std::string map_dump_string(const OccupancyMap3D& map) {
  std::ostringstream os;
  write_map_dump(map, os);
  return os.str();
}

}  // namespace vsnav
