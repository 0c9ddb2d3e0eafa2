#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <optional>
#include <string>

#include "cvbev/bev.hpp"
#include "cvbev/evaluation.hpp"
#include "cvbev/fusion.hpp"
#include "cvbev/geometry.hpp"
#include "cvbev/guidance.hpp"
#include "cvbev/pipeline.hpp"
#include "cvbev/reprojection.hpp"
#include "cvbev/synthetic.hpp"

namespace py = pybind11;
using namespace cvbev;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

void require_ndim(const py::buffer_info& b, py::ssize_t ndim, const char* what) {
  if (b.ndim != ndim) {
    throw py::value_error(std::string(what) + " must have " + std::to_string(ndim) +
                          " dimensions, got " + std::to_string(b.ndim));
  }
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v, std::vector<py::ssize_t> shape) {
  py::array_t<T> out(shape);
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(T));
  return out;
}

Raster<std::uint8_t> to_raster(const U8& a, const char* what) {
  const auto b = a.request();
  require_ndim(b, 2, what);
  Raster<std::uint8_t> r(b.shape[0], b.shape[1]);
  std::memcpy(r.data.data(), a.data(), r.data.size());
  return r;
}

PanoramaDepth to_depth(const F64& a) {
  const auto b = a.request();
  require_ndim(b, 2, "depth");
  PanoramaDepth d(b.shape[0], b.shape[1]);
  std::memcpy(d.depth.data(), a.data(), d.depth.size() * sizeof(double));
  return d;
}

FeatureMap to_features(const F64& a, const char* what) {
  const auto b = a.request();
  require_ndim(b, 3, what);
  FeatureMap m(b.shape[0], b.shape[1], b.shape[2]);
  std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(double));
  return m;
}

FlowField to_flow(const F64& a) {
  const auto b = a.request();
  require_ndim(b, 3, "flow");
  if (b.shape[0] != 2) throw py::value_error("flow must have shape (2, H, W)");
  FlowField f(b.shape[1], b.shape[2]);
  const std::size_t n = f.drow.size();
  std::memcpy(f.drow.data(), a.data(), n * sizeof(double));
  std::memcpy(f.dcol.data(), a.data() + n, n * sizeof(double));
  return f;
}

Matrix to_matrix(const F64& a, const char* what) {
  const auto b = a.request();
  require_ndim(b, 2, what);
  Matrix m(b.shape[0], b.shape[1]);
  std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(double));
  return m;
}

PipelineConfig parse_config(const std::string& json) {
  return json.empty() ? PipelineConfig{} : config_from_json(nlohmann::json::parse(json));
}

py::dict grid_dict(const BevGrid& g) {
  const auto n = static_cast<py::ssize_t>(g.size());
  std::vector<std::uint8_t> occ(g.cells.size());
  std::vector<std::uint32_t> counts(g.cells.size());
  std::vector<double> height(g.cells.size());
  for (std::size_t k = 0; k < g.cells.size(); ++k) {
    occ[k] = g.cells[k].occupied;
    counts[k] = g.cells[k].count;
    height[k] = g.cells[k].height;
  }
  py::dict d;
  d["occupied"] = to_array(occ, {n, n});
  d["counts"] = to_array(counts, {n, n});
  d["height"] = to_array(height, {n, n});
  d["values"] = to_array(g.values, {static_cast<py::ssize_t>(g.channels), n, n});
  return d;
}

py::dict render(const SyntheticScene& s) {
  const SyntheticRender r = render_synthetic(s);
  const auto ph = static_cast<py::ssize_t>(s.pano_height), pw = static_cast<py::ssize_t>(s.pano_width);
  const auto ts = static_cast<py::ssize_t>(s.tile_size);
  py::dict d;
  d["depth"] = to_array(r.depth.depth, {ph, pw});
  d["pano_labels"] = to_array(r.pano_labels.data, {ph, pw});
  d["pano_rgb"] = to_array(r.pano_rgb.values, {3, ph, pw});
  d["footprint"] = to_array(r.footprint.mask.data, {ts, ts});
  d["interior"] = to_array(r.interior.data, {ts, ts});
  d["tile_labels"] = to_array(r.tile_labels.data, {ts, ts});
  d["gsd"] = s.gsd;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cvbev, m) {
  m.doc() = "Satellite-guided panorama to bird's-eye-view projection.";

  py::register_exception<Error>(m, "CvbevError", PyExc_ValueError);

  m.def("angle_grid", [](std::size_t h, std::size_t w) {
    const AngleGrid g = compute_angle_grid(h, w);
    return py::make_tuple(to_array(g.theta_rows, {static_cast<py::ssize_t>(h)}),
                          to_array(g.phi_cols, {static_cast<py::ssize_t>(w)}));
  }, py::arg("height"), py::arg("width"));

  m.def("depth_to_points", [](const F64& depth, unsigned workers) {
    const PanoramaDepth d = to_depth(depth);
    const PointCloud pc = depth_to_points(d, compute_angle_grid(d.height, d.width), workers);
    const auto n = static_cast<py::ssize_t>(pc.size());
    std::vector<double> xyz;
    std::vector<std::int32_t> src;
    xyz.reserve(pc.size() * 3);
    src.reserve(pc.size() * 2);
    for (const CloudPoint& p : pc.points) {
      xyz.insert(xyz.end(), {p.pos.x, p.pos.y, p.pos.z});
      src.insert(src.end(), {p.src.row, p.src.col});
    }
    return py::make_tuple(to_array(xyz, {n, 3}), to_array(src, {n, 2}));
  }, py::arg("depth"), py::arg("workers") = 1,
     "Camera-frame points (N, 3) and their source pixels (N, 2); holes are skipped.");

  m.def("offset_magnitude", &offset_magnitude, py::arg("depth"), py::arg("d0"), py::arg("alpha"));
  m.def("alpha_from_ratio", &alpha_from_ratio, py::arg("rho"), py::arg("t") = kDefaultSlope);

  m.def("block_ratios", [](const U8& mask, double gsd, double t) {
    const AlphaGrid a = AlphaGrid::from_footprint(
        FootprintMask::centered(to_raster(mask, "mask"), gsd), t);
    const std::vector<double> rho(a.rho.begin(), a.rho.end()), alpha(a.alpha.begin(), a.alpha.end());
    return py::make_tuple(to_array(rho, {3, 3}), to_array(alpha, {3, 3}));
  }, py::arg("mask"), py::arg("gsd"), py::arg("t") = kDefaultSlope,
     "Per-block building ratio and alpha, both (3, 3).");

  m.def("project", [](const F64& depth, std::optional<U8> footprint, std::optional<U8> labels,
                      double gsd, double offset_east, double offset_north,
                      const std::string& config_json) {
    const PipelineConfig cfg = parse_config(config_json);
    const PanoramaDepth d = to_depth(depth);
    std::optional<FootprintMask> fp;
    if (footprint) {
      fp = FootprintMask::centered(to_raster(*footprint, "footprint"), gsd, offset_east, offset_north);
    }
    std::optional<Payload> payload;
    if (labels) payload = Payload::from_labels(to_raster(*labels, "labels"));
    ProjectionResult r;
    {
      py::gil_scoped_release release;
      r = project_panorama(d, fp ? &*fp : nullptr, payload ? &*payload : nullptr, cfg,
                           offset_east, offset_north);
    }
    py::dict out = grid_dict(r.grid);
    if (payload) {
      const auto n = static_cast<py::ssize_t>(r.grid.size());
      out["labels"] = to_array(grid_labels(r.grid, cfg.empty_label).data, {n, n});
    }
    out["shifted"] = r.stats.shifted;
    out["discarded"] = r.stats.discarded;
    return out;
  }, py::arg("depth"), py::arg("footprint") = py::none(), py::arg("labels") = py::none(),
     py::arg("gsd") = 70.0 / 256.0, py::arg("offset_east") = 0.0, py::arg("offset_north") = 0.0,
     py::arg("config_json") = "");

  m.def("warp", [](const F64& features, const F64& flow) {
    const FeatureMap out = warp(to_features(features, "features"), to_flow(flow));
    return to_array(out.data, {static_cast<py::ssize_t>(out.channels),
                               static_cast<py::ssize_t>(out.height),
                               static_cast<py::ssize_t>(out.width)});
  }, py::arg("features"), py::arg("flow"));

  m.def("fuse_aligned", [](const F64& bev, const F64& sat, const F64& flow, const F64& gate_w,
                           const std::vector<double>& gate_b, const F64& proj_w,
                           const std::vector<double>& proj_b) {
    const FeatureMap out = fuse_aligned(to_features(bev, "bev"), to_features(sat, "sat"),
                                        to_flow(flow),
                                        {to_matrix(gate_w, "gate_w"), gate_b,
                                         to_matrix(proj_w, "proj_w"), proj_b});
    return to_array(out.data, {static_cast<py::ssize_t>(out.channels),
                               static_cast<py::ssize_t>(out.height),
                               static_cast<py::ssize_t>(out.width)});
  }, py::arg("bev"), py::arg("sat"), py::arg("flow"), py::arg("gate_w"), py::arg("gate_b"),
     py::arg("proj_w"), py::arg("proj_b"));

  m.def("evaluate", [](const U8& gt, const U8& pred, std::size_t num_classes,
                       std::optional<std::uint8_t> ignore) {
    ConfusionMatrix cm(num_classes);
    cm.accumulate(to_raster(gt, "gt"), to_raster(pred, "pred"), ignore);
    const IouResult r = miou(cm);
    std::vector<std::uint64_t> counts(num_classes * num_classes);
    for (std::size_t g = 0; g < num_classes; ++g) {
      for (std::size_t p = 0; p < num_classes; ++p) counts[g * num_classes + p] = cm.at(g, p);
    }
    const auto k = static_cast<py::ssize_t>(num_classes);
    py::dict out;
    out["per_class_iou"] = r.per_class;
    out["miou"] = r.mean;
    out["accuracy"] = cm.total() ? py::cast(accuracy(cm)) : py::none();
    out["confusion_matrix"] = to_array(counts, {k, k});
    return out;
  }, py::arg("gt"), py::arg("pred"), py::arg("num_classes"), py::arg("ignore_label") = py::none(),
     "Rows of the confusion matrix are ground truth, columns are predictions.");

  m.def("render_canonical", [] { return render(canonical_scene()); });
  m.def("render_flat", [] { return render(flat_scene()); });

  m.def("interior_coverage", [](const U8& occupied, const U8& interior) {
    const Raster<std::uint8_t> occ = to_raster(occupied, "occupied");
    BevGridSpec spec;
    spec.size = occ.rows;
    if (occ.rows != occ.cols) throw py::value_error("occupied must be square");
    BevGrid g(spec, 0);
    for (std::size_t k = 0; k < occ.data.size(); ++k) g.cells[k].occupied = occ.data[k] != 0;
    return interior_coverage(g, to_raster(interior, "interior"));
  }, py::arg("occupied"), py::arg("interior"));

  m.def("run_project", [](const std::filesystem::path& manifest, const std::filesystem::path& out,
                          const std::string& config_json) {
    const PipelineConfig cfg = parse_config(config_json);
    RunSummary s;
    {
      py::gil_scoped_release release;
      s = run_project(manifest, cfg, out);
    }
    return s.written;
  }, py::arg("manifest"), py::arg("out_dir"), py::arg("config_json") = "");

  m.def("write_synthetic_pair", [](const std::filesystem::path& dir, const std::string& pair_id,
                                   bool flat) {
    const PairManifest pm = write_synthetic_pair(flat ? flat_scene() : canonical_scene(), dir, pair_id);
    save_manifest(dir / "manifest.jsonl", {pm});
    return (dir / "manifest.jsonl");
  }, py::arg("dir"), py::arg("pair_id") = "pair", py::arg("flat") = false);

  m.def("sha256_file", &sha256_file, py::arg("path"));
}
