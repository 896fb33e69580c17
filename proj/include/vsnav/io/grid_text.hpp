#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vsnav/costmap.hpp"
#include "vsnav/heightmap.hpp"

namespace vsnav {

// Heightmap snapshot, format "vsnav-heightmap 1": header, then one line per
// cell row (y-major). Cells are "U" for unknown or "<class>:<height>" with
// class R or V. Stable formatting for diff-based comparisons.

inline void write_heightmap_text(const Heightmap& hm, std::ostream& os) {
  char buf[128];
  os << "vsnav-heightmap 1\n";
  std::snprintf(buf, sizeof buf, "resolution %.9g\norigin %.9g %.9g\nsize %d %d\nreference %.9g\n",
                hm.resolution(), hm.origin().x(), hm.origin().y(), hm.size_x(),
                hm.size_y(), hm.reference_height());
  os << buf;
  for (int j = 0; j < hm.size_y(); ++j) {
    for (int i = 0; i < hm.size_x(); ++i) {
      if (i > 0) os << ' ';
      const HeightmapCell& c = hm.at(i, j);
      if (c.cell_class == CellClass::Unknown) {
        os << 'U';
      } else {
        std::snprintf(buf, sizeof buf, "%c:%.9g",
                      c.cell_class == CellClass::Real ? 'R' : 'V',
                      static_cast<double>(c.height));
        os << buf;
      }
    }
    os << '\n';
  }
}

inline Heightmap read_heightmap_text(std::istream& is) {
  std::string magic, key;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vsnav-heightmap" || version != 1)
    throw std::runtime_error("not a vsnav-heightmap snapshot");
  double resolution = 0, reference = 0;
  Vec2 origin = Vec2::Zero();
  int sx = 0, sy = 0;
  is >> key >> resolution;
  if (key != "resolution") throw std::runtime_error("heightmap text: bad header");
  is >> key >> origin.x() >> origin.y();
  if (key != "origin") throw std::runtime_error("heightmap text: bad header");
  is >> key >> sx >> sy;
  if (key != "size") throw std::runtime_error("heightmap text: bad header");
  is >> key >> reference;
  if (key != "reference") throw std::runtime_error("heightmap text: bad header");

  Heightmap hm(resolution, origin, sx, sy, reference);
  std::string token;
  for (int j = 0; j < sy; ++j) {
    for (int i = 0; i < sx; ++i) {
      if (!(is >> token)) throw std::runtime_error("heightmap text: truncated grid");
      HeightmapCell cell;
      if (token != "U") {
        if (token.size() < 3 || token[1] != ':')
          throw std::runtime_error("heightmap text: bad cell token '" + token + "'");
        cell.cell_class = token[0] == 'R' ? CellClass::Real : CellClass::Virtual;
        cell.height = std::stof(token.substr(2));
      }
      hm.at(i, j) = cell;
    }
  }
  return hm;
}

inline std::string heightmap_text_string(const Heightmap& hm) {
  std::ostringstream os;
  write_heightmap_text(hm, os);
  return os.str();
}

}  // namespace vsnav
