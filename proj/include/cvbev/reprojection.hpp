#pragma once

// Radial reprojection of a panorama point cloud away from the camera.
//
// A point at depth d >= d0 is pushed outward along its ground-plane bearing by
//   delta = ln(1 + d - d0) * alpha
// where alpha comes from the satellite footprint block (satellite-guided) or a
// fixed coefficient (depth-guided). Height is never changed.

#include <cstddef>

#include "cvbev/geometry.hpp"
#include "cvbev/guidance.hpp"

namespace cvbev {

enum class ReprojectionMode { kNone, kDepthGuided, kSatelliteGuided };

const char* to_string(ReprojectionMode mode);
ReprojectionMode parse_reprojection_mode(const std::string& name);

struct ReprojectionConfig {
  double d0 = 10.0;
  ReprojectionMode mode = ReprojectionMode::kSatelliteGuided;
  double fixed_alpha = 15.0;
  // Only honored in satellite-guided mode.
  bool clip_to_footprint = true;
  // Camera position in the ground plane (offset center).
  double center_east = 0.0;
  double center_north = 0.0;

  bool clips() const {
    return mode == ReprojectionMode::kSatelliteGuided && clip_to_footprint;
  }
  void validate() const;
};

double offset_magnitude(double depth, double d0, double alpha);

// Unit vector from center to point; zero when they coincide.
GroundPoint offset_direction(double east, double north, double center_east,
                             double center_north);

struct ReprojectionStats {
  std::size_t input = 0;
  std::size_t shifted = 0;
  std::size_t discarded = 0;
};

// Surviving points keep their input order. `alpha_grid` and `footprint` are
// required in satellite-guided mode and ignored otherwise.
PointCloud reproject(const PointCloud& cloud, const ReprojectionConfig& config,
                     const AlphaGrid* alpha_grid = nullptr,
                     const FootprintMask* footprint = nullptr,
                     ReprojectionStats* stats = nullptr);

}  // namespace cvbev
