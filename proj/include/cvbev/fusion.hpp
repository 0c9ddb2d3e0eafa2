#pragma once

// Deterministic algebra of the cross-view fusion block: flow warping, channel
// concatenation, global average pooling and 1x1 (pointwise) linear maps.
// Weights are inputs; nothing here learns.

#include <cstddef>
#include <span>
#include <vector>

#include "cvbev/common.hpp"

namespace cvbev {

struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;  // [c][row][col]

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t r, std::size_t x) {
    return data[(c * height + r) * width + x];
  }
  double at(std::size_t c, std::size_t r, std::size_t x) const {
    return data[(c * height + r) * width + x];
  }
  std::size_t plane() const { return height * width; }
  void validate() const;
};

// Per-pixel sampling displacement: output(r, x) reads input(r + drow, x + dcol).
struct FlowField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> drow;
  std::vector<double> dcol;

  FlowField() = default;
  FlowField(std::size_t h, std::size_t w, double fill_row = 0.0, double fill_col = 0.0)
      : height(h), width(w), drow(h * w, fill_row), dcol(h * w, fill_col) {}
};

// Row-major rows x cols.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n);
};

// Bilinear sampling with zero padding outside the map.
FeatureMap warp(const FeatureMap& map, const FlowField& flow);

FeatureMap concat(const FeatureMap& a, const FeatureMap& b);
FeatureMap slice_channels(const FeatureMap& map, std::size_t begin, std::size_t end);

std::vector<double> global_average_pool(const FeatureMap& map);

FeatureMap pointwise_linear(const FeatureMap& map, const Matrix& weights,
                            std::span<const double> bias);

// Gate is C_cat x C_cat acting on the pooled concatenation; projection maps
// C_cat channels to the output width.
struct FusionWeights {
  Matrix gate_weights;
  std::vector<double> gate_bias;
  Matrix proj_weights;
  std::vector<double> proj_bias;
};

// concat(warp(bev, flow), sat), scaled channel-wise by
// gate_weights * pool(concat) + gate_bias, then projected.
FeatureMap fuse_aligned(const FeatureMap& bev, const FeatureMap& sat, const FlowField& flow,
                        const FusionWeights& weights);

}  // namespace cvbev
