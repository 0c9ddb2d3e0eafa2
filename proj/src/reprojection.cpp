#include "cvbev/reprojection.hpp"

#include <cmath>

namespace cvbev {

const char* to_string(ReprojectionMode mode) {
  switch (mode) {
    case ReprojectionMode::kNone: return "none";
    case ReprojectionMode::kDepthGuided: return "dgr";
    case ReprojectionMode::kSatelliteGuided: return "sgr";
  }
  return "?";
}

ReprojectionMode parse_reprojection_mode(const std::string& name) {
  if (name == "none" || name == "NONE") return ReprojectionMode::kNone;
  if (name == "dgr" || name == "DGR") return ReprojectionMode::kDepthGuided;
  if (name == "sgr" || name == "SGR") return ReprojectionMode::kSatelliteGuided;
  throw Error("unknown reprojection mode '" + name + "' (expected none, dgr or sgr)");
}

void ReprojectionConfig::validate() const {
  if (!(d0 >= 0.0)) throw Error("reprojection d0 must be nonnegative");
  if (!(fixed_alpha >= 0.0)) throw Error("reprojection fixed_alpha must be nonnegative");
}

double offset_magnitude(double depth, double d0, double alpha) {
  if (!(depth > 0.0)) {
    throw Error("offset_magnitude: depth must be positive, got " + std::to_string(depth));
  }
  if (depth < d0) return 0.0;
  return std::log1p(depth - d0) * alpha;
}

GroundPoint offset_direction(double east, double north, double center_east,
                             double center_north) {
  const double de = east - center_east;
  const double dn = north - center_north;
  const double len = std::hypot(de, dn);
  if (len == 0.0) return {0.0, 0.0};
  return {de / len, dn / len};
}

PointCloud reproject(const PointCloud& cloud, const ReprojectionConfig& config,
                     const AlphaGrid* alpha_grid, const FootprintMask* footprint,
                     ReprojectionStats* stats) {
  config.validate();
  ReprojectionStats local;
  local.input = cloud.size();
  if (config.mode == ReprojectionMode::kNone) {
    if (stats) *stats = local;
    return cloud;
  }
  const bool guided = config.mode == ReprojectionMode::kSatelliteGuided;
  if (guided && (alpha_grid == nullptr || footprint == nullptr)) {
    throw Error("reproject: satellite-guided mode needs an alpha grid and a footprint");
  }
  const bool clip = config.clips();

  PointCloud out;
  out.src_height = cloud.src_height;
  out.src_width = cloud.src_width;
  out.points.reserve(cloud.size());
  for (const CloudPoint& p : cloud.points) {
    const GroundPoint g = camera_to_ground_plane(p.pos);
    const double alpha = guided ? alpha_grid->lookup(g.east, g.north) : config.fixed_alpha;
    const double delta = offset_magnitude(p.pos.norm(), config.d0, alpha);
    if (delta == 0.0) {
      out.points.push_back(p);
      continue;
    }
    const GroundPoint dir =
        offset_direction(g.east, g.north, config.center_east, config.center_north);
    if (dir.east == 0.0 && dir.north == 0.0) {
      out.points.push_back(p);
      continue;
    }
    const double east = delta * dir.east + g.east;
    const double north = delta * dir.north + g.north;
    if (clip && !contains(*footprint, east, north)) {
      ++local.discarded;
      continue;
    }
    CloudPoint q = p;
    q.pos.x = east;
    q.pos.z = -north;
    q.shift = delta;
    out.points.push_back(q);
    ++local.shifted;
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace cvbev
