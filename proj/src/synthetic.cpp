#include "cvbev/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cvbev {

void SyntheticScene::validate() const {
  if (!(camera_height > 0.0)) throw Error("synthetic scene: camera height must be positive");
  if (pano_height == 0 || pano_width == 0) throw Error("synthetic scene: empty panorama");
  if (tile_size == 0 || !(gsd > 0.0)) throw Error("synthetic scene: invalid tile");
  for (const SceneBox& b : buildings) {
    if (!(b.height > 0.0)) throw Error("synthetic scene: building heights must be positive");
    if (!(b.east_min < b.east_max && b.north_min < b.north_max)) {
      throw Error("synthetic scene: building rectangle is empty");
    }
    if (b.east_min <= 0.0 && 0.0 <= b.east_max && b.north_min <= 0.0 && 0.0 <= b.north_max) {
      throw Error("synthetic scene: camera lies inside a building");
    }
  }
}

SyntheticScene canonical_scene() {
  SyntheticScene s;
  s.buildings.push_back({-5.0, 5.0, 5.0, 15.0, 12.0, 1});
  return s;
}

SyntheticScene flat_scene() { return SyntheticScene{}; }

namespace {

// Slab test against an axis-aligned box in (east, north, up). Returns the
// entry distance or +inf.
double hit_box(const SceneBox& b, double ground_up, double de, double dn, double du) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  const double lo[3] = {b.east_min, b.north_min, ground_up};
  const double hi[3] = {b.east_max, b.north_max, ground_up + b.height};
  const double d[3] = {de, dn, du};
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (0.0 < lo[k] || 0.0 > hi[k]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = lo[k] / d[k];
    double c = hi[k] / d[k];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

}  // namespace

double cast_ray(const SyntheticScene& scene, const Vec3& dir, std::uint8_t* hit_label) {
  const double de = dir.x;
  const double dn = -dir.z;
  const double du = dir.y;
  const double ground_up = -scene.camera_height;
  double best = std::numeric_limits<double>::infinity();
  std::uint8_t label = scene.ground_label;
  if (du < 0.0) best = -scene.camera_height / du;
  for (const SceneBox& b : scene.buildings) {
    const double t = hit_box(b, ground_up, de, dn, du);
    if (t < best) {
      best = t;
      label = b.label;
    }
  }
  if (hit_label) *hit_label = label;
  return std::isfinite(best) ? best : kInvalidDepth;
}

Raster<std::uint8_t> erode(const Raster<std::uint8_t>& mask, std::size_t radius) {
  Raster<std::uint8_t> out(mask.rows, mask.cols, 0);
  const auto rows = static_cast<std::int64_t>(mask.rows);
  const auto cols = static_cast<std::int64_t>(mask.cols);
  const auto rad = static_cast<std::int64_t>(radius);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      bool keep = true;
      for (std::int64_t dr = -rad; dr <= rad && keep; ++dr) {
        for (std::int64_t dc = -rad; dc <= rad; ++dc) {
          const std::int64_t rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols ||
              mask.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) == 0) {
            keep = false;
            break;
          }
        }
      }
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = keep ? 1 : 0;
    }
  }
  return out;
}

namespace {

void shade(const SyntheticScene& scene, const Vec3& dir, double t, std::uint8_t label,
           float rgb[3]) {
  if (t == kInvalidDepth) {
    rgb[0] = 150.f, rgb[1] = 190.f, rgb[2] = 235.f;  // sky
    return;
  }
  const double east = t * dir.x;
  const double north = -t * dir.z;
  const double up = t * dir.y + scene.camera_height;
  if (up < 1e-6) {
    // Ground: 5 m checkerboard.
    const auto cell = static_cast<std::int64_t>(std::floor(east / 5.0) + std::floor(north / 5.0));
    const float g = (cell & 1) ? 90.f : 130.f;
    rgb[0] = g, rgb[1] = g, rgb[2] = g;
    return;
  }
  static constexpr float kPalette[8][3] = {{128, 128, 128}, {220, 80, 60},  {70, 160, 90},
                                           {70, 110, 210},  {230, 190, 60}, {170, 90, 200},
                                           {60, 190, 200},  {240, 140, 40}};
  const float* base = kPalette[label % 8];
  // Brighter toward the roofline so facade position survives projection.
  const float k = static_cast<float>(0.45 + 0.55 * std::min(1.0, up / 20.0));
  for (int ch = 0; ch < 3; ++ch) rgb[ch] = std::round(base[ch] * k);
}

}  // namespace

SyntheticRender render_synthetic(const SyntheticScene& scene) {
  scene.validate();
  SyntheticRender out;
  const AngleGrid angles = compute_angle_grid(scene.pano_height, scene.pano_width);
  out.depth = PanoramaDepth(scene.pano_height, scene.pano_width, kInvalidDepth);
  out.pano_labels = LabelRaster(scene.pano_height, scene.pano_width, scene.ground_label);
  out.pano_rgb = Payload(Payload::Kind::kNumeric, 3, scene.pano_height, scene.pano_width);

  for (std::size_t i = 0; i < scene.pano_height; ++i) {
    for (std::size_t j = 0; j < scene.pano_width; ++j) {
      const Vec3 dir = ray_direction(angles.theta(i), angles.phi(i, j));
      std::uint8_t label = scene.ground_label;
      const double t = cast_ray(scene, dir, &label);
      out.depth.at(i, j) = t;
      out.pano_labels.at(i, j) = label;
      float rgb[3];
      shade(scene, dir, t, label, rgb);
      for (std::size_t ch = 0; ch < 3; ++ch) out.pano_rgb.at(ch, i, j) = rgb[ch];
    }
  }

  Raster<std::uint8_t> mask(scene.tile_size, scene.tile_size, 0);
  out.footprint = FootprintMask::centered(mask, scene.gsd, scene.offset_east, scene.offset_north);
  out.tile_labels = LabelRaster(scene.tile_size, scene.tile_size, scene.ground_label);
  for (std::size_t r = 0; r < scene.tile_size; ++r) {
    const double north = (out.footprint.center_row - static_cast<double>(r)) * scene.gsd;
    for (std::size_t c = 0; c < scene.tile_size; ++c) {
      const double east = (static_cast<double>(c) - out.footprint.center_col) * scene.gsd;
      for (const SceneBox& b : scene.buildings) {
        if (east >= b.east_min && east < b.east_max && north >= b.north_min &&
            north < b.north_max) {
          out.footprint.mask.at(r, c) = 1;
          out.tile_labels.at(r, c) = b.label;
        }
      }
    }
  }
  out.interior = erode(out.footprint.mask, kInteriorErosion);
  return out;
}

}  // namespace cvbev
