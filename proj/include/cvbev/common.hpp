#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvbev {

// Every library failure surfaces as cvbev::Error. The pipeline layer prefixes
// the stage name so CLI users can tell where a run aborted.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

// Row-major single-channel raster.
template <typename T>
struct Raster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), data(r * c, fill) {}

  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool empty() const { return data.empty(); }
  bool same_shape(const Raster& o) const { return rows == o.rows && cols == o.cols; }
};

using LabelRaster = Raster<std::uint8_t>;

struct PixelIndex {
  std::int32_t row = 0;
  std::int32_t col = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
  friend auto operator<=>(const PixelIndex&, const PixelIndex&) = default;
};

// Ground-plane coordinates in meters, camera frame rotated to compass axes.
struct GroundPoint {
  double east = 0.0;
  double north = 0.0;
};

}  // namespace cvbev
