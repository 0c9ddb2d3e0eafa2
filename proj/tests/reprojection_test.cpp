#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cvbev/reprojection.hpp"
#include "cvbev/synthetic.hpp"

namespace cvbev {
namespace {

const double kE = std::exp(1.0);

CloudPoint point_at(double east, double north, double up, PixelIndex src = {}) {
  return {{east, up, -north}, src, 0.0};
}

PointCloud cloud_of(std::vector<CloudPoint> pts) {
  PointCloud pc;
  pc.src_height = 64;
  pc.src_width = 128;
  pc.points = std::move(pts);
  return pc;
}

PointCloud random_cloud(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> h(-30, 30), v(-3, 15);
  std::vector<CloudPoint> pts;
  for (std::size_t k = 0; k < n; ++k) {
    pts.push_back(point_at(h(rng), h(rng), v(rng),
                           {static_cast<std::int32_t>(k / 128), static_cast<std::int32_t>(k % 128)}));
  }
  return cloud_of(std::move(pts));
}

TEST(OffsetMagnitude, Values) {
  EXPECT_EQ(offset_magnitude(8, 10, 15), 0.0);
  EXPECT_EQ(offset_magnitude(10, 10, 15), 0.0);
  EXPECT_NEAR(offset_magnitude(10 + kE - 1, 10, 15), 15.0, 1e-12);
  EXPECT_EQ(offset_magnitude(50, 10, 0), 0.0);
  EXPECT_EQ(offset_magnitude(0.5, 0, 2), std::log(1.5) * 2);
}

TEST(OffsetMagnitude, RejectsNonPositiveDepth) {
  EXPECT_THROW(offset_magnitude(0.0, 10, 15), Error);
  EXPECT_THROW(offset_magnitude(-1.0, 10, 15), Error);
  EXPECT_THROW(offset_magnitude(std::nan(""), 10, 15), Error);
}

TEST(OffsetMagnitude, ConcaveAboveThreshold) {
  for (double alpha : {5.0, 7.4, 25.0}) {
    const double step = 0.05;
    for (double d = 10.0; d < 200.0; d += step) {
      const double a = offset_magnitude(d, 10, alpha);
      const double b = offset_magnitude(d + step, 10, alpha);
      const double c = offset_magnitude(d + 2 * step, 10, alpha);
      ASSERT_LE(c - 2 * b + a, 1e-12) << d;
    }
  }
}

TEST(OffsetDirection, Values) {
  GroundPoint u = offset_direction(3, 4, 0, 0);
  EXPECT_DOUBLE_EQ(u.east, 0.6);
  EXPECT_DOUBLE_EQ(u.north, 0.8);
  u = offset_direction(0, 0, 0, 0);
  EXPECT_EQ(u.east, 0.0);
  EXPECT_EQ(u.north, 0.0);
  u = offset_direction(-2, 0, 0, 0);
  EXPECT_EQ(u.east, -1.0);
  EXPECT_EQ(u.north, 0.0);
  u = offset_direction(5, 5, 2, 1);
  EXPECT_DOUBLE_EQ(u.east, 0.6);
  EXPECT_DOUBLE_EQ(u.north, 0.8);
}

TEST(Reproject, NoneIsIdentity) {
  const PointCloud pc = random_cloud(1, 500);
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kNone;
  EXPECT_EQ(reproject(pc, cfg).points, pc.points);
}

TEST(Reproject, PointAtThresholdUnchangedInEveryMode) {
  // Ground distance 6, height 8: depth exactly 10.
  const PointCloud pc = cloud_of({point_at(6, 0, 8)});
  const auto fp = FootprintMask::centered(Raster<std::uint8_t>(64, 64, 1), 1.0);
  const auto grid = AlphaGrid::from_footprint(fp);
  for (auto mode : {ReprojectionMode::kNone, ReprojectionMode::kDepthGuided,
                    ReprojectionMode::kSatelliteGuided}) {
    ReprojectionConfig cfg;
    cfg.mode = mode;
    EXPECT_EQ(reproject(pc, cfg, &grid, &fp).points, pc.points);
  }
}

TEST(Reproject, DepthGuidedHandExample) {
  // Ground position (6, 8) is 10 m out; pick the height so depth = 9 + e.
  const double d = 10 + kE - 1;
  const double up = std::sqrt(d * d - 100.0);
  const PointCloud pc = cloud_of({point_at(6, 8, up)});
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kDepthGuided;
  cfg.fixed_alpha = 5;
  ReprojectionStats stats;
  const PointCloud out = reproject(pc, cfg, nullptr, nullptr, &stats);
  ASSERT_EQ(out.size(), 1u);
  // Scalar reference: ln(1 + d - d0) * alpha along (6, 8) / 10.
  const double delta = std::log(1.0 + d - 10.0) * 5.0;
  const GroundPoint g = camera_to_ground_plane(out.points[0].pos);
  EXPECT_NEAR(g.east, 6 + delta * 0.6, 1e-12);
  EXPECT_NEAR(g.north, 8 + delta * 0.8, 1e-12);
  EXPECT_NEAR(g.east, 9.0, 1e-9);
  EXPECT_NEAR(g.north, 12.0, 1e-9);
  EXPECT_EQ(out.points[0].pos.y, up);
  EXPECT_NEAR(out.points[0].shift, 5.0, 1e-12);
  EXPECT_EQ(stats.shifted, 1u);
  EXPECT_EQ(stats.discarded, 0u);
}

TEST(Reproject, SatelliteGuidedNeedsInputs) {
  const PointCloud pc = random_cloud(2, 10);
  ReprojectionConfig cfg;
  EXPECT_THROW(reproject(pc, cfg), Error);
  const auto fp = FootprintMask::centered(Raster<std::uint8_t>(8, 8, 0), 1.0);
  EXPECT_THROW(reproject(pc, cfg, nullptr, &fp), Error);
}

TEST(Reproject, ZeroGuidanceIsIdentity) {
  const PointCloud pc = random_cloud(3, 4000);
  const auto fp = FootprintMask::centered(Raster<std::uint8_t>(256, 256, 0), 70.0 / 256);
  const auto grid = AlphaGrid::from_footprint(fp);
  ReprojectionConfig cfg;
  ReprojectionStats stats;
  EXPECT_EQ(reproject(pc, cfg, &grid, &fp, &stats).points, pc.points);
  EXPECT_EQ(stats.discarded, 0u);
  EXPECT_EQ(stats.shifted, 0u);
}

TEST(Reproject, DepthGuidedDoesNotClip) {
  const PointCloud pc = random_cloud(4, 2000);
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kDepthGuided;
  const PointCloud out = reproject(pc, cfg);
  EXPECT_EQ(out.size(), pc.size());
}

TEST(Reproject, RejectsBadConfig) {
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kDepthGuided;
  cfg.d0 = -1;
  EXPECT_THROW(reproject(random_cloud(5, 3), cfg), Error);
  cfg.d0 = 10;
  cfg.fixed_alpha = -2;
  EXPECT_THROW(reproject(random_cloud(5, 3), cfg), Error);
}

class ReprojectProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(ReprojectProperty, RadialMonotoneClipSoundAndOrderStable) {
  std::mt19937_64 rng(GetParam());
  Raster<std::uint8_t> m(128, 128);
  for (std::size_t r = 0; r < 128; ++r) {
    for (std::size_t c = 0; c < 128; ++c) m.at(r, c) = ((r / 16 + c / 16) % 2) && (rng() % 5 != 0);
  }
  const auto fp = FootprintMask::centered(m, 0.5);
  const auto grid = AlphaGrid::from_footprint(fp);
  const PointCloud pc = random_cloud(GetParam() + 100, 3000);
  ReprojectionConfig cfg;
  cfg.d0 = 5;
  ReprojectionStats stats;
  const PointCloud out = reproject(pc, cfg, &grid, &fp, &stats);
  EXPECT_EQ(stats.input, pc.size());
  EXPECT_EQ(out.size() + stats.discarded, pc.size());

  std::size_t k = 0;
  for (const CloudPoint& q : out.points) {
    while (pc.points[k].src != q.src) ++k;  // input order preserved
    const CloudPoint& p = pc.points[k];
    const GroundPoint a = camera_to_ground_plane(p.pos);
    const GroundPoint b = camera_to_ground_plane(q.pos);
    EXPECT_GE(std::hypot(b.east, b.north), std::hypot(a.east, a.north));
    EXPECT_EQ(q.pos.y, p.pos.y);
    if (q.shift > 0) EXPECT_TRUE(contains(fp, b.east, b.north));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ReprojectProperty, ::testing::Values(1u, 2u, 3u, 4u));

TEST(Reproject, FacadeOrderingIsStrict) {
  // One facade column at ground distance 12 m; points climb the wall.
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kDepthGuided;
  cfg.fixed_alpha = 7.4;
  std::vector<CloudPoint> pts;
  for (int k = 0; k < 40; ++k) pts.push_back(point_at(0, 12, 0.5 * k));
  const PointCloud out = reproject(cloud_of(pts), cfg);
  ASSERT_EQ(out.size(), pts.size());
  for (std::size_t k = 1; k < out.size(); ++k) {
    const double d1 = pts[k - 1].pos.norm(), d2 = pts[k].pos.norm();
    ASSERT_LT(d1, d2);
    if (d1 >= cfg.d0) EXPECT_LT(out.points[k - 1].shift, out.points[k].shift);
    EXPECT_LE(-out.points[k - 1].pos.z, -out.points[k].pos.z);
  }
}

TEST(Reproject, CenterOffsetChangesDirection) {
  ReprojectionConfig cfg;
  cfg.mode = ReprojectionMode::kDepthGuided;
  cfg.fixed_alpha = 1;
  cfg.d0 = 0;
  cfg.center_east = 10;
  const PointCloud out = reproject(cloud_of({point_at(5, 0, 0)}), cfg);
  EXPECT_LT(out.points[0].pos.x, 5.0);  // pushed away from (10, 0), i.e. west
}

TEST(Reproject, ModeNames) {
  EXPECT_EQ(parse_reprojection_mode("sgr"), ReprojectionMode::kSatelliteGuided);
  EXPECT_EQ(parse_reprojection_mode("dgr"), ReprojectionMode::kDepthGuided);
  EXPECT_EQ(parse_reprojection_mode("none"), ReprojectionMode::kNone);
  EXPECT_STREQ(to_string(ReprojectionMode::kDepthGuided), "dgr");
  EXPECT_THROW(parse_reprojection_mode("fancy"), Error);
}

}  // namespace
}  // namespace cvbev
