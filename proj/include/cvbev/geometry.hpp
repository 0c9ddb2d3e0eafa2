#pragma once

// Equirectangular panorama geometry: pixel angles, depth back-projection and
// the camera-frame to compass-plane bridge.
//
// Camera frame: Y is up, column 0 of the panorama faces compass north and
// column bearings increase clockwise. East = X, north = -Z.

#include <cmath>
#include <cstddef>
#include <vector>

#include "cvbev/common.hpp"

namespace cvbev {

// Per-pixel polar (theta, 0 = zenith) and azimuthal (phi) angles. Theta only
// depends on the row and phi only on the column, so one vector of each is
// stored; theta(i, j) / phi(i, j) expose the full-matrix view.
struct AngleGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> theta_rows;  // size height
  std::vector<double> phi_cols;    // size width

  double theta(std::size_t i, std::size_t /*j*/ = 0) const { return theta_rows[i]; }
  double phi(std::size_t /*i*/, std::size_t j) const { return phi_cols[j]; }
};

struct PanoramaDepth {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> depth;  // meters, row-major; <= 0 or non-finite is a hole
  bool north_at_column_zero = true;

  PanoramaDepth() = default;
  PanoramaDepth(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), depth(h * w, fill) {}

  double& at(std::size_t i, std::size_t j) { return depth[i * width + j]; }
  double at(std::size_t i, std::size_t j) const { return depth[i * width + j]; }
};

inline constexpr double kInvalidDepth = 0.0;

inline bool is_valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct CloudPoint {
  Vec3 pos;          // camera frame, meters
  PixelIndex src;    // source panorama pixel; doubles as the payload reference
  double shift = 0;  // radial offset applied by reprojection (meters)

  friend bool operator==(const CloudPoint&, const CloudPoint&) = default;
};

struct PointCloud {
  std::size_t src_height = 0;
  std::size_t src_width = 0;
  std::vector<CloudPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

AngleGrid compute_angle_grid(std::size_t height, std::size_t width);

// Unit ray for pixel angles, in camera frame.
inline Vec3 ray_direction(double theta, double phi) {
  const double s = std::sin(theta);
  return {s * std::sin(phi), std::cos(theta), s * std::cos(phi)};
}

// Back-projects every valid depth pixel. Output is row-major by source pixel
// regardless of `workers`.
PointCloud depth_to_points(const PanoramaDepth& depth, const AngleGrid& angles,
                           unsigned workers = 1);

inline GroundPoint camera_to_ground_plane(const Vec3& p) { return {p.x, -p.z}; }

// Compass bearing of column j, clockwise from north, in [0, 2pi).
inline double column_bearing(std::size_t j, std::size_t width) {
  return 2.0 * kPi * static_cast<double>(j) / static_cast<double>(width);
}

}  // namespace cvbev
