#include "cvbev/fusion.hpp"

#include <cmath>

namespace cvbev {

void FeatureMap::validate() const {
  if (data.size() != channels * height * width) {
    throw Error("feature map data does not match its declared shape");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw Error("feature map holds a non-finite value");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

FeatureMap warp(const FeatureMap& map, const FlowField& flow) {
  map.validate();
  if (flow.height != map.height || flow.width != map.width ||
      flow.drow.size() != map.plane() || flow.dcol.size() != map.plane()) {
    throw Error("warp: flow field is " + std::to_string(flow.height) + "x" +
                std::to_string(flow.width) + " but the map is " + std::to_string(map.height) +
                "x" + std::to_string(map.width));
  }
  FeatureMap out(map.channels, map.height, map.width);
  const auto h = static_cast<std::int64_t>(map.height);
  const auto w = static_cast<std::int64_t>(map.width);
  for (std::size_t r = 0; r < map.height; ++r) {
    for (std::size_t x = 0; x < map.width; ++x) {
      const std::size_t k = r * map.width + x;
      const double sy = static_cast<double>(r) + flow.drow[k];
      const double sx = static_cast<double>(x) + flow.dcol[k];
      if (!std::isfinite(sy) || !std::isfinite(sx)) {
        throw Error("warp: non-finite flow value");
      }
      const double fy0 = std::floor(sy);
      const double fx0 = std::floor(sx);
      const double wy = sy - fy0;
      const double wx = sx - fx0;
      // Too far outside to touch any pixel.
      if (fy0 < -1.0 || fx0 < -1.0 || fy0 >= static_cast<double>(h) ||
          fx0 >= static_cast<double>(w)) {
        continue;
      }
      const auto y0 = static_cast<std::int64_t>(fy0);
      const auto x0 = static_cast<std::int64_t>(fx0);
      const std::int64_t ys[2] = {y0, y0 + 1};
      const std::int64_t xs[2] = {x0, x0 + 1};
      const double wys[2] = {1.0 - wy, wy};
      const double wxs[2] = {1.0 - wx, wx};
      for (std::size_t c = 0; c < map.channels; ++c) {
        double acc = 0.0;
        for (int a = 0; a < 2; ++a) {
          if (ys[a] < 0 || ys[a] >= h || wys[a] == 0.0) continue;
          for (int b = 0; b < 2; ++b) {
            if (xs[b] < 0 || xs[b] >= w || wxs[b] == 0.0) continue;
            acc += wys[a] * wxs[b] *
                   map.at(c, static_cast<std::size_t>(ys[a]), static_cast<std::size_t>(xs[b]));
          }
        }
        out.at(c, r, x) = acc;
      }
    }
  }
  return out;
}

FeatureMap concat(const FeatureMap& a, const FeatureMap& b) {
  a.validate();
  b.validate();
  if (a.height != b.height || a.width != b.width) {
    throw Error("concat: spatial size mismatch (" + std::to_string(a.height) + "x" +
                std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                std::to_string(b.width) + ")");
  }
  FeatureMap out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

FeatureMap slice_channels(const FeatureMap& map, std::size_t begin, std::size_t end) {
  if (begin > end || end > map.channels) throw Error("slice_channels: range out of bounds");
  FeatureMap out(end - begin, map.height, map.width);
  const auto p = static_cast<std::ptrdiff_t>(map.plane());
  std::copy(map.data.begin() + static_cast<std::ptrdiff_t>(begin) * p,
            map.data.begin() + static_cast<std::ptrdiff_t>(end) * p, out.data.begin());
  return out;
}

std::vector<double> global_average_pool(const FeatureMap& map) {
  map.validate();
  std::vector<double> means(map.channels, 0.0);
  if (map.plane() == 0) return means;
  for (std::size_t c = 0; c < map.channels; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < map.plane(); ++k) s += map.data[c * map.plane() + k];
    means[c] = s / static_cast<double>(map.plane());
  }
  return means;
}

FeatureMap pointwise_linear(const FeatureMap& map, const Matrix& weights,
                            std::span<const double> bias) {
  map.validate();
  if (weights.cols != map.channels || bias.size() != weights.rows ||
      weights.data.size() != weights.rows * weights.cols) {
    throw Error("pointwise_linear: weights are " + std::to_string(weights.rows) + "x" +
                std::to_string(weights.cols) + " with " + std::to_string(bias.size()) +
                " biases for a " + std::to_string(map.channels) + "-channel map");
  }
  FeatureMap out(weights.rows, map.height, map.width);
  const std::size_t plane = map.plane();
  for (std::size_t o = 0; o < weights.rows; ++o) {
    double* dst = out.data.data() + o * plane;
    for (std::size_t k = 0; k < plane; ++k) dst[k] = bias[o];
    for (std::size_t i = 0; i < map.channels; ++i) {
      const double wgt = weights.at(o, i);
      const double* src = map.data.data() + i * plane;
      for (std::size_t k = 0; k < plane; ++k) dst[k] += wgt * src[k];
    }
  }
  return out;
}

FeatureMap fuse_aligned(const FeatureMap& bev, const FeatureMap& sat, const FlowField& flow,
                        const FusionWeights& weights) {
  FeatureMap stacked = concat(warp(bev, flow), sat);

  const std::vector<double> pooled = global_average_pool(stacked);
  FeatureMap pooled_map(stacked.channels, 1, 1);
  pooled_map.data = pooled;
  const FeatureMap gate = pointwise_linear(pooled_map, weights.gate_weights, weights.gate_bias);
  if (gate.channels != stacked.channels) {
    throw Error("fuse_aligned: gate produces " + std::to_string(gate.channels) +
                " channels for a " + std::to_string(stacked.channels) + "-channel stack");
  }
  for (std::size_t c = 0; c < stacked.channels; ++c) {
    const double g = gate.data[c];
    for (std::size_t k = 0; k < stacked.plane(); ++k) stacked.data[c * stacked.plane() + k] *= g;
  }
  return pointwise_linear(stacked, weights.proj_weights, weights.proj_bias);
}

}  // namespace cvbev
