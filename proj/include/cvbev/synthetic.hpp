#pragma once

// Analytic test scenes: a flat ground plane with axis-aligned box buildings,
// ray cast from a panorama camera at the origin.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cvbev/bev.hpp"
#include "cvbev/geometry.hpp"
#include "cvbev/guidance.hpp"

namespace cvbev {

struct SceneBox {
  double east_min = 0.0;
  double east_max = 0.0;
  double north_min = 0.0;
  double north_max = 0.0;
  double height = 0.0;  // meters above ground
  std::uint8_t label = 1;
};

struct SyntheticScene {
  std::vector<SceneBox> buildings;
  std::uint8_t ground_label = 0;
  double camera_height = 2.5;
  std::size_t pano_height = 512;
  std::size_t pano_width = 1024;
  // Satellite tile; camera sits offset_east/offset_north meters from its center.
  std::size_t tile_size = 256;
  double gsd = 70.0 / 256.0;
  double offset_east = 0.0;
  double offset_north = 0.0;

  void validate() const;
};

// One 10 x 10 m box, 12 m tall, starting 5 m north of the camera.
SyntheticScene canonical_scene();
// Same camera and tile, no buildings.
SyntheticScene flat_scene();

struct SyntheticRender {
  PanoramaDepth depth;
  FootprintMask footprint;
  Raster<std::uint8_t> interior;  // footprint eroded by kInteriorErosion pixels
  LabelRaster pano_labels;        // class of the hit surface (ground label for sky)
  Payload pano_rgb;               // numeric 3-channel shading for visual panels
  LabelRaster tile_labels;        // building label inside footprints, ground elsewhere
};

inline constexpr std::size_t kInteriorErosion = 2;

// Nearest hit distance along a unit ray from the camera; 0 (hole) on a miss.
// `hit_label` receives the surface class when non-null.
double cast_ray(const SyntheticScene& scene, const Vec3& dir, std::uint8_t* hit_label = nullptr);

SyntheticRender render_synthetic(const SyntheticScene& scene);

// Pixels of `mask` whose whole (2r+1)^2 neighborhood lies inside the mask.
Raster<std::uint8_t> erode(const Raster<std::uint8_t>& mask, std::size_t radius);

}  // namespace cvbev
