#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "cvbev/pipeline.hpp"
#include "cvbev/raster_io.hpp"
#include "cvbev/synthetic.hpp"
#include "scratch_dir.hpp"

namespace cvbev {
namespace {

using testing_support::ScratchDir;

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

TEST(DepthPng, ScaleAndHoles) {
  ScratchDir dir("depth");
  PngImage img;
  img.rows = 1;
  img.cols = 3;
  img.channels = 1;
  img.bit_depth = 16;
  img.samples = {256, 0, 65535};
  write_png(dir / "d.png", img);
  const PanoramaDepth d = load_depth_png(dir / "d.png");
  EXPECT_EQ(d.at(0, 0), 1.0);
  EXPECT_EQ(d.at(0, 1), kInvalidDepth);
  EXPECT_FALSE(is_valid_depth(d.at(0, 1)));
  EXPECT_DOUBLE_EQ(d.at(0, 2), 65535.0 / 256.0);
  EXPECT_EQ(load_depth_png(dir / "d.png", 0.01).at(0, 0), 2.56);
}

TEST(DepthPng, RoundTripWithinHalfQuantum) {
  ScratchDir dir("depth_rt");
  const SyntheticRender r = render_synthetic(canonical_scene());
  save_depth_png(dir / "d.png", r.depth);
  const PanoramaDepth back = load_depth_png(dir / "d.png");
  ASSERT_EQ(back.height, r.depth.height);
  ASSERT_EQ(back.width, r.depth.width);
  for (std::size_t k = 0; k < back.depth.size(); ++k) {
    const double src = r.depth.depth[k];
    if (!is_valid_depth(src) || src > 65535.0 / 256.0) {
      EXPECT_EQ(back.depth[k], kInvalidDepth);
      continue;
    }
    ASSERT_LE(std::abs(back.depth[k] - src), 0.5 / 256.0) << k;
  }
}

TEST(DepthPng, OutOfRangeWrittenAsHole) {
  ScratchDir dir("depth_oor");
  PanoramaDepth d(1, 3, 0.0);
  d.at(0, 0) = 300.0;
  d.at(0, 1) = 1e-4;
  d.at(0, 2) = 5.0;
  save_depth_png(dir / "d.png", d);
  const PanoramaDepth back = load_depth_png(dir / "d.png");
  EXPECT_EQ(back.at(0, 0), kInvalidDepth);
  EXPECT_EQ(back.at(0, 1), kInvalidDepth);
  EXPECT_EQ(back.at(0, 2), 5.0);
}

TEST(DepthPng, ErrorsNameThePath) {
  ScratchDir dir("depth_err");
  write_label_png(dir / "eight.png", LabelRaster(2, 2, 3));
  try {
    load_depth_png(dir / "eight.png");
    FAIL() << "8-bit PNG accepted as depth";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("eight.png"), std::string::npos);
  }
  write_text(dir / "junk.png", "not a png");
  EXPECT_THROW(load_depth_png(dir / "junk.png"), Error);
  EXPECT_THROW(load_depth_png(dir / "missing.png"), Error);
  EXPECT_THROW(load_depth_png(dir / "eight.png", 0.0), Error);
}

TEST(Png, LabelMaskAndPayloadRoundTrips) {
  ScratchDir dir("png");
  std::mt19937 rng(1);
  LabelRaster l(7, 11);
  for (auto& v : l.data) v = static_cast<std::uint8_t>(rng());
  write_label_png(dir / "l.png", l);
  const LabelRaster lb = read_label_png(dir / "l.png");
  EXPECT_EQ(lb.data, l.data);
  EXPECT_EQ(lb.rows, 7u);

  const Raster<std::uint8_t> mask = read_mask_png(dir / "l.png");
  for (std::size_t k = 0; k < l.data.size(); ++k) EXPECT_EQ(mask.data[k], l.data[k] ? 1 : 0);
  write_mask_png(dir / "m.png", mask);
  EXPECT_EQ(read_mask_png(dir / "m.png").data, mask.data);
  for (auto v : read_label_png(dir / "m.png").data) EXPECT_TRUE(v == 0 || v == 255);

  Payload rgb(Payload::Kind::kNumeric, 3, 5, 6);
  for (auto& v : rgb.values) v = static_cast<float>(rng() % 256);
  write_payload_png(dir / "rgb.png", rgb);
  const Payload back = read_payload_png(dir / "rgb.png");
  EXPECT_EQ(back.kind, Payload::Kind::kNumeric);
  EXPECT_EQ(back.channels, 3u);
  EXPECT_EQ(back.values, rgb.values);
  const Payload gray = read_payload_png(dir / "l.png");
  EXPECT_EQ(gray.kind, Payload::Kind::kCategorical);
  EXPECT_EQ(gray.channels, 1u);
}

TEST(Png, EncodingIsDeterministic) {
  LabelRaster l(32, 32);
  for (std::size_t k = 0; k < l.data.size(); ++k) l.data[k] = static_cast<std::uint8_t>(k * 7);
  EXPECT_EQ(encode_png(label_image(l)), encode_png(label_image(l)));
}

TEST(Cvbr, ByteLayout) {
  RawRaster r;
  r.dtype = RawDType::kU8;
  r.channels = 1;
  r.height = 1;
  r.width = 2;
  r.values = {7, 300};
  const std::vector<std::uint8_t> want = {'C', 'V', 'B', 'R', 1, 1, 0, 0, 0, 1, 0, 0, 0,
                                          2,   0,   0,   0,   1, 7, 255};
  EXPECT_EQ(encode_raw(r), want);

  r.dtype = RawDType::kF32;
  r.values = {1.0, -2.5};
  const auto f = encode_raw(r);
  ASSERT_EQ(f.size(), 18u + 8u);
  EXPECT_EQ(f[17], 2);
  // 1.0f = 0x3f800000, little-endian.
  EXPECT_EQ(f[18], 0x00);
  EXPECT_EQ(f[20], 0x80);
  EXPECT_EQ(f[21], 0x3f);
}

TEST(Cvbr, RoundTripEveryDtype) {
  ScratchDir dir("cvbr");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (RawDType t : {RawDType::kU8, RawDType::kF32, RawDType::kF64}) {
    RawRaster r;
    r.dtype = t;
    r.channels = 3;
    r.height = 4;
    r.width = 5;
    for (int k = 0; k < 60; ++k) {
      switch (t) {
        case RawDType::kU8: r.values.push_back(static_cast<double>(rng() % 256)); break;
        case RawDType::kF32: r.values.push_back(static_cast<float>(d(rng))); break;
        case RawDType::kF64: r.values.push_back(d(rng)); break;
      }
    }
    write_raw(dir / "x.cvbr", r);
    const RawRaster back = read_raw(dir / "x.cvbr");
    EXPECT_EQ(back.dtype, t);
    EXPECT_EQ(back.channels, 3u);
    EXPECT_EQ(back.values, r.values);
  }
}

TEST(Cvbr, RejectsCorruptInput) {
  RawRaster r;
  r.channels = 1;
  r.height = 2;
  r.width = 2;
  r.values = {1, 2, 3, 4};
  auto bytes = encode_raw(r);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_raw(bad), Error);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(decode_raw(bad), Error);
  bad = bytes;
  bad[17] = 7;
  EXPECT_THROW(decode_raw(bad), Error);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_raw(bad), Error);
  EXPECT_THROW(decode_raw({'C', 'V'}), Error);
  r.values.pop_back();
  EXPECT_THROW(encode_raw(r), Error);
}

TEST(Cvbr, FusionConversions) {
  RawRaster r;
  r.dtype = RawDType::kF64;
  r.channels = 2;
  r.height = 3;
  r.width = 4;
  for (int k = 0; k < 24; ++k) r.values.push_back(k * 0.5);
  const FeatureMap m = to_feature_map(r);
  EXPECT_EQ(m.at(1, 2, 3), 11.5);
  EXPECT_EQ(from_feature_map(m).values, r.values);
  const FlowField f = to_flow_field(r);
  EXPECT_EQ(f.drow[5], 2.5);
  EXPECT_EQ(f.dcol[0], 6.0);
  EXPECT_THROW(to_matrix(r), Error);
  r.channels = 1;
  r.values.resize(12);
  const Matrix w = to_matrix(r);
  EXPECT_EQ(w.rows, 3u);
  EXPECT_EQ(w.at(2, 1), 4.5);
  EXPECT_THROW(to_vector(r), Error);
  r.height = 1;
  r.width = 12;
  EXPECT_EQ(to_vector(r).size(), 12u);
}

PairManifest sample_manifest(const std::string& id) {
  PairManifest m;
  m.pair_id = id;
  m.panorama_path = "p/" + id + ".png";
  m.depth_path = "d/" + id + ".png";
  m.footprint_path = "f/" + id + ".png";
  m.satellite_label_path = "s/" + id + ".png";
  m.gsd = 0.3;
  m.offset_east = 1.5;
  m.offset_north = -2.0;
  m.tile_size = 128;
  return m;
}

TEST(Manifest, RoundTripAndDefaults) {
  ScratchDir dir("manifest");
  save_manifest(dir / "m.jsonl", {sample_manifest("a"), sample_manifest("b")});
  const auto back = load_manifest(dir / "m.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].pair_id, "b");
  EXPECT_EQ(back[0].offset_north, -2.0);
  EXPECT_EQ(back[0].tile_size, 128u);
  const auto m = manifest_from_json(nlohmann::json::parse(
      R"({"pair_id":"x","panorama_path":"p","depth_path":"d","footprint_path":"f",
          "satellite_label_path":"s","gsd":0.5,"tile_size":64})"));
  EXPECT_EQ(m.offset_east, 0.0);
  EXPECT_EQ(m.camera_height, 2.5);
  EXPECT_EQ(m.resolve("rel.png", "/base"), std::filesystem::path("/base/rel.png"));
  EXPECT_EQ(m.resolve("/abs.png", "/base"), std::filesystem::path("/abs.png"));
}

TEST(Manifest, Errors) {
  ScratchDir dir("manifest_err");
  const std::string good = manifest_to_json(sample_manifest("a")).dump();
  write_text(dir / "dup.jsonl", good + "\n\n" + good + "\n");
  EXPECT_THROW(load_manifest(dir / "dup.jsonl"), Error);
  write_text(dir / "empty.jsonl", "\n  \n");
  EXPECT_THROW(load_manifest(dir / "empty.jsonl"), Error);
  write_text(dir / "broken.jsonl", good + "\n{not json\n");
  try {
    load_manifest(dir / "broken.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  EXPECT_THROW(load_manifest(dir / "nope.jsonl"), Error);
  auto j = nlohmann::json::parse(good);
  j["gsd"] = 0;
  EXPECT_THROW(manifest_from_json(j), Error);
  j = nlohmann::json::parse(good);
  j["tile_size"] = 0;
  EXPECT_THROW(manifest_from_json(j), Error);
  j = nlohmann::json::parse(good);
  j["depth_path"] = "";
  EXPECT_THROW(manifest_from_json(j), Error);
  j = nlohmann::json::parse(good);
  j.erase("footprint_path");
  EXPECT_THROW(manifest_from_json(j), Error);
  j = nlohmann::json::parse(good);
  j["pair_id"] = "../escape";
  EXPECT_THROW(manifest_from_json(j), Error);
}

TEST(Config, DefaultsParseAndEcho) {
  const PipelineConfig def = config_from_json(nlohmann::json::object());
  EXPECT_EQ(def.bev.size, 256u);
  EXPECT_EQ(def.bev.extent, 70.0);
  EXPECT_EQ(def.bev.reduction, Reduction::kMaxHeight);
  EXPECT_EQ(def.reprojection.mode, ReprojectionMode::kSatelliteGuided);
  EXPECT_EQ(def.reprojection.d0, 10.0);
  EXPECT_EQ(def.t, 20.0);
  EXPECT_EQ(def.depth_scale, 1.0 / 256.0);
  EXPECT_FALSE(def.camera_height);

  const PipelineConfig c = config_from_json(nlohmann::json::parse(
      R"({"size":128,"extent":50,"reduction":"mean","mode":"dgr","d0":8,"t":30,
          "fixed_alpha":9,"camera_height":2.0,"workers":4})"));
  EXPECT_EQ(c.bev.size, 128u);
  EXPECT_EQ(c.bev.reduction, Reduction::kMean);
  EXPECT_EQ(c.reprojection.mode, ReprojectionMode::kDepthGuided);
  EXPECT_EQ(c.reprojection.fixed_alpha, 9.0);
  EXPECT_EQ(*c.camera_height, 2.0);
  EXPECT_EQ(c.workers, 4u);
  const auto echo = config_to_json(c);
  EXPECT_FALSE(echo.contains("workers"));
  EXPECT_EQ(config_from_json(nlohmann::json::parse(echo.dump())).bev.extent, 50.0);

  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"size":0})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"mode":"magic"})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"t":-1})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"size":"big"})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1]")), Error);
}

}  // namespace
}  // namespace cvbev
