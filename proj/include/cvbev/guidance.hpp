#pragma once

// Satellite footprint guidance: 3x3 block building ratios and the offset
// strength coefficients derived from them.

#include <array>
#include <cstddef>
#include <cstdint>

#include "cvbev/common.hpp"

namespace cvbev {

// North-up binary footprint raster. Pixel (r, c) is centered at continuous
// pixel coordinate (r, c); the camera sits at (center_row, center_col).
struct FootprintMask {
  Raster<std::uint8_t> mask;  // 1 = building, 0 = not
  double gsd = 1.0;           // meters per pixel
  double center_row = 0.0;
  double center_col = 0.0;

  std::size_t rows() const { return mask.rows; }
  std::size_t cols() const { return mask.cols; }

  // Tile whose camera sits at the geometric tile center shifted by the
  // camera's east/north offset in meters.
  static FootprintMask centered(Raster<std::uint8_t> mask, double gsd,
                                double offset_east = 0.0, double offset_north = 0.0);

  // Continuous pixel coordinates of a ground point.
  double row_of(double north) const { return center_row - north / gsd; }
  double col_of(double east) const { return center_col + east / gsd; }

  void validate() const;
};

struct BlockBounds {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;  // exclusive
  std::size_t col_begin = 0;
  std::size_t col_end = 0;  // exclusive

  std::size_t pixel_count() const {
    return (row_end - row_begin) * (col_end - col_begin);
  }
};

// Block index = 3 * block_row + block_col.
struct BlockRatios {
  std::array<double, 9> rho{};
  std::array<BlockBounds, 9> bounds{};
};

inline constexpr double kDefaultSlope = 20.0;
inline constexpr double kRatioThreshold = 0.1;

// Splits [0, n) into three runs; the first (n mod 3) runs get one extra pixel.
std::array<std::size_t, 4> split_in_three(std::size_t n);

BlockRatios block_ratio_grid(const FootprintMask& footprint);

// 0 when rho <= 0.1, otherwise 5 + t * rho.
double alpha_from_ratio(double rho, double t);

struct AlphaGrid {
  std::array<double, 9> rho{};
  std::array<double, 9> alpha{};
  std::array<BlockBounds, 9> bounds{};
  double t = kDefaultSlope;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double gsd = 1.0;
  double center_row = 0.0;
  double center_col = 0.0;

  static AlphaGrid from_footprint(const FootprintMask& footprint,
                                  double t = kDefaultSlope);

  // Block index holding the ground point; points outside the tile are clamped
  // to the nearest edge pixel first.
  std::size_t block_of(double east, double north) const;
  double lookup(double east, double north) const { return alpha[block_of(east, north)]; }
};

inline double alpha_lookup(const AlphaGrid& grid, double east, double north) {
  return grid.lookup(east, north);
}

// Nearest-pixel (round half away from zero) membership test.
bool contains(const FootprintMask& footprint, double east, double north);

}  // namespace cvbev
