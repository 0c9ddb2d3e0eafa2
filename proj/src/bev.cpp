#include "cvbev/bev.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace cvbev {

const char* to_string(Reduction r) {
  switch (r) {
    case Reduction::kFirst: return "first";
    case Reduction::kMean: return "mean";
    case Reduction::kMaxHeight: return "max_height";
  }
  return "?";
}

Reduction parse_reduction(const std::string& name) {
  if (name == "first" || name == "FIRST") return Reduction::kFirst;
  if (name == "mean" || name == "MEAN") return Reduction::kMean;
  if (name == "max_height" || name == "MAX_HEIGHT") return Reduction::kMaxHeight;
  throw Error("unknown reduction '" + name + "' (expected first, mean or max_height)");
}

void BevGridSpec::validate() const {
  if (size == 0) throw Error("BEV grid size must be at least 1");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw Error("BEV extent must be positive");
}

Payload Payload::from_labels(const LabelRaster& labels) {
  Payload p(Kind::kCategorical, 1, labels.rows, labels.cols);
  for (std::size_t k = 0; k < labels.data.size(); ++k) {
    p.values[k] = static_cast<float>(labels.data[k]);
  }
  return p;
}

BevGrid::BevGrid(const BevGridSpec& s, std::size_t payload_channels)
    : spec(s),
      cells(s.size * s.size),
      channels(payload_channels),
      values(payload_channels * s.size * s.size, 0.f) {}

std::size_t BevGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const BevCell& c) { return c.occupied; }));
}

std::optional<CellIndex> cell_of(const BevGridSpec& spec, double east, double north) {
  const double res = spec.resolution();
  const double half = static_cast<double>(spec.size) / 2.0;
  const double r = std::floor(half - north / res);
  const double c = std::floor(half + east / res);
  const double n = static_cast<double>(spec.size);
  if (!(r >= 0.0 && r < n && c >= 0.0 && c < n)) return std::nullopt;
  return CellIndex{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

GroundPoint cell_center(const BevGridSpec& spec, std::size_t row, std::size_t col) {
  const double res = spec.resolution();
  const double half = static_cast<double>(spec.size) / 2.0;
  return {(static_cast<double>(col) + 0.5 - half) * res,
          (half - static_cast<double>(row) - 0.5) * res};
}

namespace {

constexpr std::int64_t kDropped = -1;

void check_payload(const PointCloud& cloud, const Payload* payload) {
  if (payload == nullptr) return;
  if (payload->values.size() != payload->channels * payload->rows * payload->cols) {
    throw Error("payload raster size does not match its declared shape");
  }
  if (cloud.src_height != 0 &&
      (payload->rows != cloud.src_height || payload->cols != cloud.src_width)) {
    throw Error("payload is " + std::to_string(payload->rows) + "x" +
                std::to_string(payload->cols) + " but the cloud comes from a " +
                std::to_string(cloud.src_height) + "x" + std::to_string(cloud.src_width) +
                " panorama");
  }
  for (const CloudPoint& p : cloud.points) {
    if (p.src.row < 0 || p.src.col < 0 ||
        static_cast<std::size_t>(p.src.row) >= payload->rows ||
        static_cast<std::size_t>(p.src.col) >= payload->cols) {
      throw Error("point source index lies outside the payload raster");
    }
  }
}

std::vector<std::int64_t> bin_points(const PointCloud& cloud, const BevGridSpec& spec,
                                     unsigned workers) {
  std::vector<std::int64_t> bins(cloud.size(), kDropped);
  auto run = [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const GroundPoint g = camera_to_ground_plane(cloud.points[k].pos);
      if (auto idx = cell_of(spec, g.east, g.north)) {
        bins[k] = static_cast<std::int64_t>(idx->row * spec.size + idx->col);
      }
    }
  };
  const std::size_t n = cloud.size();
  const std::size_t chunks = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (chunks == 1) {
    run(0, n);
    return bins;
  }
  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < chunks; ++c) {
    threads.emplace_back(run, n * c / chunks, n * (c + 1) / chunks);
  }
  for (auto& t : threads) t.join();
  return bins;
}

// Does candidate `p` replace the current winner `w` of a cell?
bool wins(Reduction reduction, const CloudPoint& p, const CloudPoint& w) {
  if (reduction == Reduction::kMaxHeight) {
    if (p.pos.y != w.pos.y) return p.pos.y > w.pos.y;
  }
  return p.src < w.src;
}

}  // namespace

BevGrid rasterize(const PointCloud& cloud, const BevGridSpec& spec, const Payload* payload,
                  unsigned workers) {
  spec.validate();
  check_payload(cloud, payload);
  if (spec.reduction == Reduction::kMean && payload != nullptr &&
      payload->kind == Payload::Kind::kCategorical) {
    throw Error("rasterize: MEAN reduction cannot average a categorical payload");
  }
  const std::size_t channels = payload ? payload->channels : 0;
  BevGrid grid(spec, channels);
  const auto bins = bin_points(cloud, spec, workers);
  const std::size_t plane = spec.size * spec.size;

  if (spec.reduction != Reduction::kMean) {
    std::vector<std::int64_t> winner(plane, kDropped);
    for (std::size_t k = 0; k < bins.size(); ++k) {
      if (bins[k] == kDropped) continue;
      auto& w = winner[static_cast<std::size_t>(bins[k])];
      if (w == kDropped || wins(spec.reduction, cloud.points[k],
                                cloud.points[static_cast<std::size_t>(w)])) {
        w = static_cast<std::int64_t>(k);
      }
      ++grid.cells[static_cast<std::size_t>(bins[k])].count;
    }
    for (std::size_t cell = 0; cell < plane; ++cell) {
      if (winner[cell] == kDropped) continue;
      const CloudPoint& p = cloud.points[static_cast<std::size_t>(winner[cell])];
      BevCell& c = grid.cells[cell];
      c.occupied = true;
      c.height = p.pos.y;
      c.src = p.src;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        grid.values[ch * plane + cell] = payload->at(ch, static_cast<std::size_t>(p.src.row),
                                                     static_cast<std::size_t>(p.src.col));
      }
    }
    return grid;
  }

  // MEAN: accumulate in (cell, source index) order so sums do not depend on the
  // input order.
  std::vector<std::size_t> order;
  order.reserve(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (bins[k] != kDropped) order.push_back(k);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (bins[a] != bins[b]) return bins[a] < bins[b];
    if (cloud.points[a].src != cloud.points[b].src) {
      return cloud.points[a].src < cloud.points[b].src;
    }
    return a < b;
  });
  std::vector<double> sums(channels);
  for (std::size_t s = 0; s < order.size();) {
    const auto cell = static_cast<std::size_t>(bins[order[s]]);
    std::size_t e = s;
    double height_sum = 0.0;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (; e < order.size() && static_cast<std::size_t>(bins[order[e]]) == cell; ++e) {
      const CloudPoint& p = cloud.points[order[e]];
      height_sum += p.pos.y;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        sums[ch] += payload->at(ch, static_cast<std::size_t>(p.src.row),
                                static_cast<std::size_t>(p.src.col));
      }
    }
    const auto n = static_cast<double>(e - s);
    BevCell& c = grid.cells[cell];
    c.occupied = true;
    c.count = static_cast<std::uint32_t>(e - s);
    c.height = height_sum / n;
    c.src = cloud.points[order[s]].src;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      grid.values[ch * plane + cell] = static_cast<float>(sums[ch] / n);
    }
    s = e;
  }
  return grid;
}

CellShift offset_to_cells(const BevGridSpec& spec, double offset_east, double offset_north) {
  const double res = spec.resolution();
  return {static_cast<std::int64_t>(std::round(-offset_north / res)),
          static_cast<std::int64_t>(std::round(offset_east / res))};
}

BevGrid translate(const BevGrid& grid, double offset_east, double offset_north) {
  const CellShift shift = offset_to_cells(grid.spec, offset_east, offset_north);
  BevGrid out(grid.spec, grid.channels);
  const auto n = static_cast<std::int64_t>(grid.size());
  const std::size_t plane = grid.size() * grid.size();
  for (std::int64_t r = 0; r < n; ++r) {
    const std::int64_t tr = r + shift.rows;
    if (tr < 0 || tr >= n) continue;
    for (std::int64_t c = 0; c < n; ++c) {
      const std::int64_t tc = c + shift.cols;
      if (tc < 0 || tc >= n) continue;
      const auto from = static_cast<std::size_t>(r * n + c);
      const auto to = static_cast<std::size_t>(tr * n + tc);
      if (!grid.cells[from].occupied) continue;
      out.cells[to] = grid.cells[from];
      for (std::size_t ch = 0; ch < grid.channels; ++ch) {
        out.values[ch * plane + to] = grid.values[ch * plane + from];
      }
    }
  }
  return out;
}

std::optional<double> ground_range(double theta, double camera_height) {
  const double c = std::cos(theta);
  if (!(c < 0.0)) return std::nullopt;
  return camera_height * std::sin(theta) / -c;
}

namespace {

// First row whose polar angle lies strictly below the horizon.
std::size_t first_ground_row(const AngleGrid& angles) {
  std::size_t i = 0;
  while (i < angles.height && !(std::cos(angles.theta_rows[i]) < 0.0)) ++i;
  return i;
}

BevGrid splat_ground(const Payload& pano, double camera_height, const BevGridSpec& spec) {
  const AngleGrid angles = compute_angle_grid(pano.rows, pano.cols);
  // A flat-ground depth map sent through the ordinary back-projection.
  PanoramaDepth depth(pano.rows, pano.cols, kInvalidDepth);
  for (std::size_t i = first_ground_row(angles); i < pano.rows; ++i) {
    const double d = camera_height / -std::cos(angles.theta_rows[i]);
    for (std::size_t j = 0; j < pano.cols; ++j) depth.at(i, j) = d;
  }
  BevGridSpec first = spec;
  first.reduction = Reduction::kFirst;
  return rasterize(depth_to_points(depth, angles), first, &pano);
}

BevGrid sample_spherical(const Payload& pano, double camera_height, const BevGridSpec& spec) {
  const AngleGrid angles = compute_angle_grid(pano.rows, pano.cols);
  BevGrid grid(spec, pano.channels);
  const std::size_t row_min = first_ground_row(angles);
  if (row_min >= pano.rows) return grid;
  const auto h = static_cast<double>(pano.rows);
  const auto w = static_cast<double>(pano.cols);
  const auto lo = static_cast<double>(row_min);
  const auto hi = h - 1.0;
  const std::size_t plane = spec.size * spec.size;
  const bool nearest = pano.kind == Payload::Kind::kCategorical;

  for (std::size_t r = 0; r < spec.size; ++r) {
    for (std::size_t c = 0; c < spec.size; ++c) {
      const GroundPoint g = cell_center(spec, r, c);
      const double range = std::hypot(g.east, g.north);
      const double theta = kPi - std::atan2(range, camera_height);
      double bearing = std::atan2(g.east, g.north);
      if (bearing < 0.0) bearing += 2.0 * kPi;
      const double y = std::clamp(theta * h / kPi, lo, hi);
      double x = bearing * w / (2.0 * kPi);
      if (x >= w) x -= w;

      const auto near_row = static_cast<std::size_t>(std::clamp(std::round(y), lo, hi));
      auto near_col = static_cast<std::size_t>(std::round(x));
      if (near_col >= pano.cols) near_col = 0;

      BevCell& cell = grid.cells[r * spec.size + c];
      cell.occupied = true;
      cell.count = 1;
      cell.height = -camera_height;
      cell.src = {static_cast<std::int32_t>(near_row), static_cast<std::int32_t>(near_col)};

      if (nearest) {
        for (std::size_t ch = 0; ch < pano.channels; ++ch) {
          grid.values[ch * plane + r * spec.size + c] = pano.at(ch, near_row, near_col);
        }
        continue;
      }
      const double y0f = std::floor(y);
      const double x0f = std::floor(x);
      const double fy = y - y0f;
      const double fx = x - x0f;
      const auto y0 = static_cast<std::size_t>(y0f);
      const std::size_t y1 = std::min(y0 + 1, pano.rows - 1);
      const auto x0 = static_cast<std::size_t>(x0f) % pano.cols;
      const std::size_t x1 = (x0 + 1) % pano.cols;
      for (std::size_t ch = 0; ch < pano.channels; ++ch) {
        const double v = (1 - fy) * ((1 - fx) * pano.at(ch, y0, x0) + fx * pano.at(ch, y0, x1)) +
                         fy * ((1 - fx) * pano.at(ch, y1, x0) + fx * pano.at(ch, y1, x1));
        grid.values[ch * plane + r * spec.size + c] = static_cast<float>(v);
      }
    }
  }
  return grid;
}

}  // namespace

BevGrid ground_plane_project(const Payload& panorama, double camera_height,
                             const BevGridSpec& spec, GroundProjection mode) {
  if (!(camera_height > 0.0)) {
    throw Error("ground_plane_project: camera height must be positive, got " +
                std::to_string(camera_height));
  }
  spec.validate();
  if (panorama.rows == 0 || panorama.cols == 0) {
    throw Error("ground_plane_project: empty panorama");
  }
  return mode == GroundProjection::kFeature ? splat_ground(panorama, camera_height, spec)
                                            : sample_spherical(panorama, camera_height, spec);
}

}  // namespace cvbev
