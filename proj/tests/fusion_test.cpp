#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cvbev/fusion.hpp"

namespace cvbev {
namespace {

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2, 2);
  FeatureMap m(c, h, w);
  for (auto& v : m.data) v = d(rng);
  return m;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  Matrix m(r, c);
  for (auto& v : m.data) v = d(rng);
  return m;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void expect_maps_near(const FeatureMap& a, const FeatureMap& b, double tol) {
  ASSERT_EQ(a.channels, b.channels);
  ASSERT_EQ(a.height, b.height);
  ASSERT_EQ(a.width, b.width);
  for (std::size_t k = 0; k < a.data.size(); ++k) ASSERT_NEAR(a.data[k], b.data[k], tol) << k;
}

// Direct bilinear evaluation with explicit zero padding.
double sample_oracle(const FeatureMap& m, std::size_t c, double y, double x) {
  const auto px = [&](long r, long col) -> double {
    if (r < 0 || col < 0 || r >= static_cast<long>(m.height) || col >= static_cast<long>(m.width)) {
      return 0.0;
    }
    return m.at(c, static_cast<std::size_t>(r), static_cast<std::size_t>(col));
  };
  const long y0 = static_cast<long>(std::floor(y));
  const long x0 = static_cast<long>(std::floor(x));
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  return (1 - fy) * (1 - fx) * px(y0, x0) + (1 - fy) * fx * px(y0, x0 + 1) +
         fy * (1 - fx) * px(y0 + 1, x0) + fy * fx * px(y0 + 1, x0 + 1);
}

FlowField random_flow(std::size_t h, std::size_t w, double range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-range, range);
  FlowField f(h, w);
  for (auto& v : f.drow) v = d(rng);
  for (auto& v : f.dcol) v = d(rng);
  return f;
}

TEST(Warp, ZeroFlowIsIdentity) {
  const FeatureMap m = random_map(3, 7, 9, 1);
  EXPECT_EQ(warp(m, FlowField(7, 9)).data, m.data);
}

TEST(Warp, UnitColumnShift) {
  FeatureMap m(2, 4, 5);
  for (std::size_t k = 0; k < m.data.size(); ++k) m.data[k] = static_cast<double>(k + 1);
  const FeatureMap out = warp(m, FlowField(4, 5, 0.0, 1.0));
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t x = 0; x < 5; ++x) {
        EXPECT_EQ(out.at(c, r, x), x + 1 < 5 ? m.at(c, r, x + 1) : 0.0);
      }
    }
  }
}

TEST(Warp, HalfPixelSplitsImpulse) {
  FeatureMap m(1, 5, 5);
  m.at(0, 2, 2) = 1.0;
  const FeatureMap out = warp(m, FlowField(5, 5, 0.5, 0.0));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t x = 0; x < 5; ++x) {
      const double want = (x == 2 && (r == 1 || r == 2)) ? 0.5 : 0.0;
      EXPECT_EQ(out.at(0, r, x), want) << r << "," << x;
    }
  }
}

TEST(Warp, MatchesOracleIncludingBorders) {
  const FeatureMap m = random_map(4, 11, 13, 2);
  const FlowField f = random_flow(11, 13, 3.0, 3);
  const FeatureMap out = warp(m, f);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t r = 0; r < 11; ++r) {
      for (std::size_t x = 0; x < 13; ++x) {
        const std::size_t k = r * 13 + x;
        ASSERT_NEAR(out.at(c, r, x), sample_oracle(m, c, r + f.drow[k], x + f.dcol[k]), 1e-12);
      }
    }
  }
}

TEST(Warp, Errors) {
  const FeatureMap m = random_map(1, 4, 4, 4);
  EXPECT_THROW(warp(m, FlowField(4, 5)), Error);
  FlowField bad(4, 4);
  bad.drow[3] = std::nan("");
  EXPECT_THROW(warp(m, bad), Error);
  FeatureMap inf = m;
  inf.data[0] = INFINITY;
  EXPECT_THROW(warp(inf, FlowField(4, 4)), Error);
}

TEST(Warp, LinearAndPartitionOfUnity) {
  const FeatureMap a = random_map(8, 32, 32, 5);
  const FeatureMap b = random_map(8, 32, 32, 6);
  const FlowField f = random_flow(32, 32, 4.0, 7);
  const double al = 0.7, be = -1.3;
  FeatureMap mix(8, 32, 32);
  for (std::size_t k = 0; k < mix.data.size(); ++k) mix.data[k] = al * a.data[k] + be * b.data[k];
  const FeatureMap wa = warp(a, f), wb = warp(b, f), wm = warp(mix, f);
  for (std::size_t k = 0; k < mix.data.size(); ++k) {
    ASSERT_NEAR(wm.data[k], al * wa.data[k] + be * wb.data[k], 1e-9);
  }
  const FeatureMap ones(8, 32, 32, 1.0);
  const FeatureMap wo = warp(ones, f);
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t x = 0; x < 32; ++x) {
      const std::size_t k = r * 32 + x;
      const double y = r + f.drow[k], xx = x + f.dcol[k];
      if (y < 0 || xx < 0 || y > 31 || xx > 31) continue;
      for (std::size_t c = 0; c < 8; ++c) ASSERT_NEAR(wo.at(c, r, x), 1.0, 1e-9);
    }
  }
}

TEST(Concat, OrderingEmptyOperandAndRoundTrip) {
  const FeatureMap a = random_map(1, 3, 4, 8), b = random_map(1, 3, 4, 9);
  const FeatureMap ab = concat(a, b);
  ASSERT_EQ(ab.channels, 2u);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t x = 0; x < 4; ++x) {
      EXPECT_EQ(ab.at(0, r, x), a.at(0, r, x));
      EXPECT_EQ(ab.at(1, r, x), b.at(0, r, x));
    }
  }
  EXPECT_EQ(concat(a, FeatureMap(0, 3, 4)).data, a.data);
  const FeatureMap x = random_map(5, 32, 32, 10), y = random_map(3, 32, 32, 11);
  const FeatureMap xy = concat(x, y);
  EXPECT_EQ(slice_channels(xy, 0, 5).data, x.data);
  EXPECT_EQ(slice_channels(xy, 5, 8).data, y.data);
  EXPECT_THROW(concat(a, random_map(1, 4, 4, 1)), Error);
  EXPECT_THROW(slice_channels(xy, 3, 9), Error);
}

TEST(Concat, Associative) {
  const FeatureMap a = random_map(2, 5, 6, 12), b = random_map(3, 5, 6, 13),
                   c = random_map(1, 5, 6, 14);
  EXPECT_EQ(concat(concat(a, b), c).data, concat(a, concat(b, c)).data);
}

TEST(Pool, Values) {
  EXPECT_EQ(global_average_pool(FeatureMap(2, 3, 5, 4.25)), (std::vector<double>{4.25, 4.25}));
  FeatureMap imp(1, 4, 8);
  imp.at(0, 1, 6) = 1.0;
  EXPECT_DOUBLE_EQ(global_average_pool(imp)[0], 1.0 / 32.0);
  const FeatureMap m = random_map(3, 4, 4, 15);
  const auto means = global_average_pool(m);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t x = 0; x < 4; ++x) s += m.at(c, r, x);
    }
    EXPECT_NEAR(means[c], s / 16.0, 1e-12);
  }
}

TEST(PointwiseLinear, Values) {
  const FeatureMap m = random_map(3, 5, 7, 16);
  const std::vector<double> zero3(3, 0.0);
  EXPECT_EQ(pointwise_linear(m, Matrix::identity(3), zero3).data, m.data);
  const std::vector<double> b = {2.5, -1.0};
  const FeatureMap k = pointwise_linear(m, Matrix(2, 3), b);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t x = 0; x < 7; ++x) {
      EXPECT_EQ(k.at(0, r, x), 2.5);
      EXPECT_EQ(k.at(1, r, x), -1.0);
    }
  }
  const Matrix w = random_matrix(2, 3, 17);
  const FeatureMap out = pointwise_linear(m, w, b);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t x = 0; x < 7; ++x) {
        double s = b[o];
        for (std::size_t i = 0; i < 3; ++i) s += w.at(o, i) * m.at(i, r, x);
        EXPECT_NEAR(out.at(o, r, x), s, 1e-12);
      }
    }
  }
  EXPECT_THROW(pointwise_linear(m, Matrix(2, 4), b), Error);
  EXPECT_THROW(pointwise_linear(m, w, zero3), Error);
}

TEST(PointwiseLinear, Composes) {
  const FeatureMap m = random_map(8, 32, 32, 18);
  const Matrix w1 = random_matrix(5, 8, 19), w2 = random_matrix(4, 5, 20);
  Matrix w21(4, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      for (std::size_t k = 0; k < 5; ++k) w21.at(i, j) += w2.at(i, k) * w1.at(k, j);
    }
  }
  const std::vector<double> z5(5, 0.0), z4(4, 0.0);
  expect_maps_near(pointwise_linear(pointwise_linear(m, w1, z5), w2, z4),
                   pointwise_linear(m, w21, z4), 1e-9);
}

TEST(FuseAligned, IdentityGatingGivesConcat) {
  const FeatureMap bev = random_map(2, 6, 6, 21), sat = random_map(3, 6, 6, 22);
  FusionWeights w{Matrix(5, 5), std::vector<double>(5, 1.0), Matrix::identity(5),
                  std::vector<double>(5, 0.0)};
  EXPECT_EQ(fuse_aligned(bev, sat, FlowField(6, 6), w).data, concat(bev, sat).data);
  w.proj_weights = Matrix(4, 5);
  w.proj_bias.assign(4, 0.0);
  const FeatureMap zero = fuse_aligned(bev, sat, random_flow(6, 6, 2, 1), w);
  EXPECT_EQ(zero.channels, 4u);
  for (double v : zero.data) EXPECT_EQ(v, 0.0);
}

TEST(FuseAligned, MatchesManualComposition) {
  const FeatureMap bev = random_map(2, 4, 4, 23), sat = random_map(2, 4, 4, 24);
  const FlowField f = random_flow(4, 4, 1.5, 25);
  const FusionWeights w{random_matrix(4, 4, 26), random_vector(4, 27), random_matrix(3, 4, 28),
                        random_vector(3, 29)};
  // Scalar composition from the oracle sampler.
  FeatureMap stacked(4, 4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t x = 0; x < 4; ++x) {
      const std::size_t k = r * 4 + x;
      for (std::size_t c = 0; c < 2; ++c) {
        stacked.at(c, r, x) = sample_oracle(bev, c, r + f.drow[k], x + f.dcol[k]);
        stacked.at(c + 2, r, x) = sat.at(c, r, x);
      }
    }
  }
  std::vector<double> pooled(4, 0.0), gate(4);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < 16; ++k) pooled[c] += stacked.data[c * 16 + k] / 16.0;
  }
  for (std::size_t o = 0; o < 4; ++o) {
    gate[o] = w.gate_bias[o];
    for (std::size_t i = 0; i < 4; ++i) gate[o] += w.gate_weights.at(o, i) * pooled[i];
  }
  FeatureMap expect(3, 4, 4);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t k = 0; k < 16; ++k) {
      double s = w.proj_bias[o];
      for (std::size_t i = 0; i < 4; ++i) s += w.proj_weights.at(o, i) * gate[i] * stacked.data[i * 16 + k];
      expect.data[o * 16 + k] = s;
    }
  }
  expect_maps_near(fuse_aligned(bev, sat, f, w), expect, 1e-12);
}

TEST(FuseAligned, ShapeErrorsPropagate) {
  const FeatureMap bev = random_map(2, 4, 4, 30), sat = random_map(2, 4, 4, 31);
  FusionWeights w{Matrix(3, 4), std::vector<double>(3), Matrix::identity(4), std::vector<double>(4)};
  EXPECT_THROW(fuse_aligned(bev, sat, FlowField(4, 4), w), Error);
  w.gate_weights = Matrix(4, 4);
  w.gate_bias.assign(4, 1.0);
  EXPECT_THROW(fuse_aligned(bev, random_map(2, 5, 4, 1), FlowField(4, 4), w), Error);
}

}  // namespace
}  // namespace cvbev
