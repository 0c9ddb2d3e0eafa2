#include "cvbev/geometry.hpp"

#include <algorithm>
#include <thread>

namespace cvbev {

AngleGrid compute_angle_grid(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw Error("compute_angle_grid: panorama dimensions must be positive, got " +
                std::to_string(height) + "x" + std::to_string(width));
  }
  AngleGrid g;
  g.height = height;
  g.width = width;
  g.theta_rows.resize(height);
  g.phi_cols.resize(width);
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t i = 0; i < height; ++i) {
    g.theta_rows[i] = static_cast<double>(i) * kPi / h;
  }
  for (std::size_t j = 0; j < width; ++j) {
    g.phi_cols[j] = -2.0 * kPi * static_cast<double>(j) / w + kPi;
  }
  return g;
}

namespace {

void emit_rows(const PanoramaDepth& depth, const std::vector<double>& sin_t,
               const std::vector<double>& cos_t, const std::vector<double>& sin_p,
               const std::vector<double>& cos_p, std::size_t row_begin,
               std::size_t row_end, std::vector<CloudPoint>& out) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    for (std::size_t j = 0; j < depth.width; ++j) {
      const double d = depth.at(i, j);
      if (!is_valid_depth(d)) continue;
      CloudPoint p;
      p.pos.x = d * sin_t[i] * sin_p[j];
      p.pos.y = d * cos_t[i];
      p.pos.z = d * sin_t[i] * cos_p[j];
      p.src = {static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)};
      out.push_back(p);
    }
  }
}

}  // namespace

PointCloud depth_to_points(const PanoramaDepth& depth, const AngleGrid& angles,
                           unsigned workers) {
  if (depth.height != angles.height || depth.width != angles.width ||
      depth.depth.size() != depth.height * depth.width) {
    throw Error("depth_to_points: depth is " + std::to_string(depth.height) + "x" +
                std::to_string(depth.width) + " but angle grid is " +
                std::to_string(angles.height) + "x" + std::to_string(angles.width));
  }
  std::vector<double> sin_t(depth.height), cos_t(depth.height);
  std::vector<double> sin_p(depth.width), cos_p(depth.width);
  for (std::size_t i = 0; i < depth.height; ++i) {
    sin_t[i] = std::sin(angles.theta_rows[i]);
    cos_t[i] = std::cos(angles.theta_rows[i]);
  }
  for (std::size_t j = 0; j < depth.width; ++j) {
    sin_p[j] = std::sin(angles.phi_cols[j]);
    cos_p[j] = std::cos(angles.phi_cols[j]);
  }

  PointCloud cloud;
  cloud.src_height = depth.height;
  cloud.src_width = depth.width;

  const std::size_t n_chunks =
      std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(depth.height, 1));
  if (n_chunks == 1) {
    cloud.points.reserve(depth.depth.size());
    emit_rows(depth, sin_t, cos_t, sin_p, cos_p, 0, depth.height, cloud.points);
    return cloud;
  }

  // Contiguous row bands, concatenated in band order.
  std::vector<std::vector<CloudPoint>> parts(n_chunks);
  std::vector<std::thread> threads;
  threads.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t b = depth.height * c / n_chunks;
    const std::size_t e = depth.height * (c + 1) / n_chunks;
    threads.emplace_back([&, b, e, c] {
      emit_rows(depth, sin_t, cos_t, sin_p, cos_p, b, e, parts[c]);
    });
  }
  for (auto& t : threads) t.join();
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  cloud.points.reserve(total);
  for (auto& p : parts) cloud.points.insert(cloud.points.end(), p.begin(), p.end());
  return cloud;
}

}  // namespace cvbev
