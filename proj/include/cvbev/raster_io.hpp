#pragma once

// File formats: PNG (8-bit gray/RGB, 16-bit gray depth) and CVBR raw rasters.
//
// CVBR layout, all little-endian:
//   "CVBR" | u8 version (1) | u32 C | u32 H | u32 W | u8 dtype | C*H*W values
// dtype: 1 = u8, 2 = f32, 3 = f64. Values are row-major within each channel,
// channels stored one after another.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cvbev/bev.hpp"
#include "cvbev/fusion.hpp"
#include "cvbev/geometry.hpp"
#include "cvbev/guidance.hpp"

namespace cvbev {

struct PngImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
  int bit_depth = 8;         // 8 or 16
  std::vector<std::uint16_t> samples;  // interleaved, row-major
};

PngImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const PngImage& image);
std::vector<std::uint8_t> encode_png(const PngImage& image);

PngImage label_image(const LabelRaster& labels);
// One- or three-channel payload, values rounded and clamped to [0, 255].
PngImage payload_image(const Payload& payload);

LabelRaster read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelRaster& labels);

// Any nonzero pixel is a building.
Raster<std::uint8_t> read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Raster<std::uint8_t>& mask);

// 8-bit gray -> categorical one-channel payload; RGB -> numeric three-channel.
Payload read_payload_png(const std::filesystem::path& path);
void write_payload_png(const std::filesystem::path& path, const Payload& payload);

inline constexpr double kDefaultDepthScale = 1.0 / 256.0;

// raw * scale meters; raw 0 is a hole.
PanoramaDepth load_depth_png(const std::filesystem::path& path,
                             double scale = kDefaultDepthScale);
// Depths are rounded to the nearest quantum; holes and depths past the 16-bit
// range are written as 0.
void save_depth_png(const std::filesystem::path& path, const PanoramaDepth& depth,
                    double scale = kDefaultDepthScale);

enum class RawDType : std::uint8_t { kU8 = 1, kF32 = 2, kF64 = 3 };

struct RawRaster {
  RawDType dtype = RawDType::kF32;
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> values;  // C*H*W, stored at dtype precision on write
};

inline constexpr std::uint8_t kRawVersion = 1;

std::vector<std::uint8_t> encode_raw(const RawRaster& raster);
RawRaster decode_raw(const std::vector<std::uint8_t>& bytes);
void write_raw(const std::filesystem::path& path, const RawRaster& raster);
RawRaster read_raw(const std::filesystem::path& path);

FeatureMap to_feature_map(const RawRaster& raster);
RawRaster from_feature_map(const FeatureMap& map, RawDType dtype = RawDType::kF64);
// 2-D raster (C = 1) as a matrix; 1-D raster (C = H = 1) as a vector.
Matrix to_matrix(const RawRaster& raster);
std::vector<double> to_vector(const RawRaster& raster);
// Two-channel raster: channel 0 = row displacement, channel 1 = column.
FlowField to_flow_field(const RawRaster& raster);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace cvbev
