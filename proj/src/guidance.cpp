#include "cvbev/guidance.hpp"

#include <algorithm>
#include <cmath>

namespace cvbev {

FootprintMask FootprintMask::centered(Raster<std::uint8_t> mask, double gsd,
                                      double offset_east, double offset_north) {
  FootprintMask fp;
  fp.gsd = gsd;
  fp.center_row = (static_cast<double>(mask.rows) - 1.0) / 2.0 - offset_north / gsd;
  fp.center_col = (static_cast<double>(mask.cols) - 1.0) / 2.0 + offset_east / gsd;
  fp.mask = std::move(mask);
  return fp;
}

void FootprintMask::validate() const {
  if (mask.empty()) throw Error("footprint mask is empty");
  if (!(gsd > 0.0) || !std::isfinite(gsd)) {
    throw Error("footprint gsd must be positive, got " + std::to_string(gsd));
  }
  if (!(center_row >= -0.5 && center_row < rows() - 0.5 && center_col >= -0.5 &&
        center_col < cols() - 0.5)) {
    throw Error("footprint camera center lies outside the tile");
  }
  for (auto v : mask.data) {
    if (v > 1) throw Error("footprint mask values must be 0 or 1");
  }
}

std::array<std::size_t, 4> split_in_three(std::size_t n) {
  const std::size_t base = n / 3;
  const std::size_t extra = n % 3;
  std::array<std::size_t, 4> edges{};
  for (std::size_t k = 0; k < 3; ++k) {
    edges[k + 1] = edges[k] + base + (k < extra ? 1 : 0);
  }
  return edges;
}

BlockRatios block_ratio_grid(const FootprintMask& footprint) {
  if (footprint.mask.empty()) throw Error("block_ratio_grid: empty footprint raster");
  const auto re = split_in_three(footprint.rows());
  const auto ce = split_in_three(footprint.cols());
  BlockRatios out;
  for (std::size_t br = 0; br < 3; ++br) {
    for (std::size_t bc = 0; bc < 3; ++bc) {
      BlockBounds b{re[br], re[br + 1], ce[bc], ce[bc + 1]};
      std::size_t building = 0;
      for (std::size_t r = b.row_begin; r < b.row_end; ++r) {
        for (std::size_t c = b.col_begin; c < b.col_end; ++c) {
          building += footprint.mask.at(r, c) != 0;
        }
      }
      const std::size_t total = b.pixel_count();
      out.bounds[3 * br + bc] = b;
      out.rho[3 * br + bc] =
          total == 0 ? 0.0 : static_cast<double>(building) / static_cast<double>(total);
    }
  }
  return out;
}

double alpha_from_ratio(double rho, double t) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error("alpha_from_ratio: ratio must lie in [0, 1], got " + std::to_string(rho));
  }
  if (!(t >= 0.0)) throw Error("alpha_from_ratio: slope t must be nonnegative");
  if (rho <= kRatioThreshold) return 0.0;
  return 5.0 + t * rho;
}

AlphaGrid AlphaGrid::from_footprint(const FootprintMask& footprint, double t) {
  const BlockRatios ratios = block_ratio_grid(footprint);
  AlphaGrid g;
  g.rho = ratios.rho;
  g.bounds = ratios.bounds;
  g.t = t;
  g.rows = footprint.rows();
  g.cols = footprint.cols();
  g.gsd = footprint.gsd;
  g.center_row = footprint.center_row;
  g.center_col = footprint.center_col;
  for (std::size_t k = 0; k < 9; ++k) g.alpha[k] = alpha_from_ratio(g.rho[k], t);
  return g;
}

namespace {

std::size_t clamped_pixel(double coord, std::size_t n) {
  const double r = std::round(coord);
  if (!(r > 0.0)) return 0;  // also catches NaN
  if (r >= static_cast<double>(n - 1)) return n - 1;
  return static_cast<std::size_t>(r);
}

std::size_t block_along(std::size_t pixel, std::size_t n) {
  const auto edges = split_in_three(n);
  for (std::size_t k = 0; k < 3; ++k) {
    if (pixel < edges[k + 1]) return k;
  }
  return 2;
}

}  // namespace

std::size_t AlphaGrid::block_of(double east, double north) const {
  const std::size_t r = clamped_pixel(center_row - north / gsd, rows);
  const std::size_t c = clamped_pixel(center_col + east / gsd, cols);
  return 3 * block_along(r, rows) + block_along(c, cols);
}

bool contains(const FootprintMask& footprint, double east, double north) {
  if (footprint.mask.empty()) return false;
  const double r = std::round(footprint.row_of(north));
  const double c = std::round(footprint.col_of(east));
  if (!(r >= 0.0 && c >= 0.0)) return false;
  if (r >= static_cast<double>(footprint.rows()) ||
      c >= static_cast<double>(footprint.cols())) {
    return false;
  }
  return footprint.mask.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) != 0;
}

}  // namespace cvbev
