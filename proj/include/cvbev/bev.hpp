#pragma once

// Top-down raster of a point cloud plus the two depth-free ground-plane
// baselines (forward feature splatting and inverse spherical resampling).
//
// Grid convention: north-up, camera at continuous cell coordinate
// (size/2, size/2), cell (row, col) = floor(size/2 - north/res, size/2 + east/res).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvbev/geometry.hpp"

namespace cvbev {

enum class Reduction { kFirst, kMean, kMaxHeight };

const char* to_string(Reduction r);
Reduction parse_reduction(const std::string& name);

struct BevGridSpec {
  std::size_t size = 256;
  double extent = 70.0;  // meters per side
  Reduction reduction = Reduction::kMaxHeight;

  double resolution() const { return extent / static_cast<double>(size); }
  void validate() const;
};

// Per-pixel values attached to a panorama (labels, colors, features).
// Categorical payloads (labels) cannot be averaged.
struct Payload {
  enum class Kind { kCategorical, kNumeric };

  Kind kind = Kind::kNumeric;
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;  // channel-major: [c][row][col]

  Payload() = default;
  Payload(Kind k, std::size_t c, std::size_t r, std::size_t w, float fill = 0.f)
      : kind(k), channels(c), rows(r), cols(w), values(c * r * w, fill) {}

  float& at(std::size_t c, std::size_t r, std::size_t x) {
    return values[(c * rows + r) * cols + x];
  }
  float at(std::size_t c, std::size_t r, std::size_t x) const {
    return values[(c * rows + r) * cols + x];
  }

  static Payload from_labels(const LabelRaster& labels);
};

struct BevCell {
  bool occupied = false;
  double height = 0.0;  // up coordinate of the retained point (mean under MEAN)
  PixelIndex src;       // retained source pixel (lowest index under MEAN)
  std::uint32_t count = 0;

  friend bool operator==(const BevCell&, const BevCell&) = default;
};

struct BevGrid {
  BevGridSpec spec;
  std::vector<BevCell> cells;  // size*size, row-major
  std::size_t channels = 0;
  std::vector<float> values;   // channels*size*size, channel-major; 0 where empty

  BevGrid() = default;
  BevGrid(const BevGridSpec& s, std::size_t payload_channels);

  std::size_t size() const { return spec.size; }
  BevCell& cell(std::size_t r, std::size_t c) { return cells[r * spec.size + c]; }
  const BevCell& cell(std::size_t r, std::size_t c) const { return cells[r * spec.size + c]; }
  float& value(std::size_t ch, std::size_t r, std::size_t c) {
    return values[(ch * spec.size + r) * spec.size + c];
  }
  float value(std::size_t ch, std::size_t r, std::size_t c) const {
    return values[(ch * spec.size + r) * spec.size + c];
  }
  std::size_t occupied_count() const;

  friend bool operator==(const BevGrid& a, const BevGrid& b) {
    return a.spec.size == b.spec.size && a.spec.extent == b.spec.extent &&
           a.cells == b.cells && a.channels == b.channels && a.values == b.values;
  }
};

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

std::optional<CellIndex> cell_of(const BevGridSpec& spec, double east, double north);

// Cell center in ground-plane meters.
GroundPoint cell_center(const BevGridSpec& spec, std::size_t row, std::size_t col);

// `payload`, when given, must match the cloud's source panorama dimensions.
// Output does not depend on `workers`.
BevGrid rasterize(const PointCloud& cloud, const BevGridSpec& spec,
                  const Payload* payload = nullptr, unsigned workers = 1);

// Pixel shift of a metric offset (round half away from zero).
struct CellShift {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
};
CellShift offset_to_cells(const BevGridSpec& spec, double offset_east, double offset_north);

BevGrid translate(const BevGrid& grid, double offset_east, double offset_north);

enum class GroundProjection { kFeature, kSphericalImage };

// Flat-ground baselines without depth. kFeature splats panorama pixels below
// the horizon forward (FIRST reduction); kSphericalImage samples the panorama
// for every grid cell (bilinear for numeric payloads, nearest for labels).
BevGrid ground_plane_project(const Payload& panorama, double camera_height,
                             const BevGridSpec& spec, GroundProjection mode);

// Ground range of a below-horizon ray; nullopt at or above the horizon.
std::optional<double> ground_range(double theta, double camera_height);

}  // namespace cvbev
