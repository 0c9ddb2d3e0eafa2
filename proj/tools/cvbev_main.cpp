// cvbev: command-line front end.
//
//   cvbev synth   --out DIR [--scene scene.json]
//   cvbev project --manifest pairs.jsonl --out DIR [--config cfg.json] [overrides]
//   cvbev compare --manifest pairs.jsonl --out DIR [--config cfg.json] [overrides]
//   cvbev eval    --pred DIR --gt DIR --classes BG,A1,... [--ignore 255] [--json out.json]
//   cvbev alpha   --footprint mask.png --gsd 0.27 [--t 20]
//   cvbev fuse    --bev a.cvbr --sat b.cvbr --flow f.cvbr --gate-w ... --out fused.cvbr

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cvbev/fusion.hpp"
#include "cvbev/guidance.hpp"
#include "cvbev/pipeline.hpp"
#include "cvbev/raster_io.hpp"
#include "cvbev/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::size_t> size;
  std::optional<double> extent;
  std::optional<double> d0;
  std::optional<double> t;
  std::optional<double> fixed_alpha;
  std::optional<double> camera_height;
  std::optional<double> depth_scale;
  std::optional<std::string> mode;
  std::optional<std::string> reduction;
  std::optional<unsigned> workers;
  std::optional<int> empty_label;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--size", o.size, "BEV grid size in cells (default 256)");
  cmd->add_option("--extent", o.extent, "BEV extent in meters (default 70)");
  cmd->add_option("--d0", o.d0, "depth below which nothing moves (default 10)");
  cmd->add_option("--t", o.t, "alpha slope (default 20)");
  cmd->add_option("--fixed-alpha", o.fixed_alpha, "alpha used by dgr mode (default 15)");
  cmd->add_option("--camera-height", o.camera_height, "override manifest camera height");
  cmd->add_option("--depth-scale", o.depth_scale, "meters per depth PNG unit (default 1/256)");
  cmd->add_option("--mode", o.mode, "sgr | dgr | none (default sgr)");
  cmd->add_option("--reduction", o.reduction, "max_height | first | mean (default max_height)");
  cmd->add_option("--workers", o.workers, "worker threads; output bytes do not depend on it");
  cmd->add_option("--empty-label", o.empty_label, "label written to empty cells (default 0)");
}

cvbev::PipelineConfig resolve_config(const Overrides& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw cvbev::Error("[config] " + o.config_path + ": " + e.what());
    }
  }
  if (o.size) j["size"] = *o.size;
  if (o.extent) j["extent"] = *o.extent;
  if (o.d0) j["d0"] = *o.d0;
  if (o.t) j["t"] = *o.t;
  if (o.fixed_alpha) j["fixed_alpha"] = *o.fixed_alpha;
  if (o.camera_height) j["camera_height"] = *o.camera_height;
  if (o.depth_scale) j["depth_scale"] = *o.depth_scale;
  if (o.mode) j["mode"] = *o.mode;
  if (o.reduction) j["reduction"] = *o.reduction;
  if (o.workers) j["workers"] = *o.workers;
  if (o.empty_label) j["empty_label"] = *o.empty_label;
  try {
    return cvbev::config_from_json(j);
  } catch (const cvbev::Error& e) {
    throw cvbev::Error(std::string("[config] ") + e.what());
  }
}

cvbev::SyntheticScene scene_from_json(const json& j) {
  cvbev::SyntheticScene s = cvbev::flat_scene();
  s.camera_height = j.value("camera_height", s.camera_height);
  s.pano_height = j.value("pano_height", s.pano_height);
  s.pano_width = j.value("pano_width", s.pano_width);
  s.ground_label = j.value("ground_label", s.ground_label);
  s.tile_size = j.value("tile_size", s.tile_size);
  s.gsd = j.value("gsd", s.gsd);
  s.offset_east = j.value("offset_east", s.offset_east);
  s.offset_north = j.value("offset_north", s.offset_north);
  for (const auto& b : j.value("buildings", json::array())) {
    s.buildings.push_back({b.at("east_min").get<double>(), b.at("east_max").get<double>(),
                           b.at("north_min").get<double>(), b.at("north_max").get<double>(),
                           b.at("height").get<double>(), b.value("label", std::uint8_t{1})});
  }
  return s;
}

int cmd_synth(const std::string& out_dir, const std::string& scene_path, const std::string& pair_id) {
  cvbev::SyntheticScene scene = cvbev::canonical_scene();
  if (!scene_path.empty()) {
    std::ifstream in(scene_path);
    try {
      scene = scene_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw cvbev::Error("[synth] " + scene_path + ": " + e.what());
    }
  }
  const fs::path dir(out_dir);
  const cvbev::PairManifest m = cvbev::write_synthetic_pair(scene, dir, pair_id);
  cvbev::save_manifest(dir / "manifest.jsonl", {m});
  std::cout << (dir / "manifest.jsonl").string() << "\n";
  return 0;
}

int cmd_alpha(const std::string& footprint_path, double gsd, double t) {
  auto mask = cvbev::read_mask_png(footprint_path);
  const auto fp = cvbev::FootprintMask::centered(std::move(mask), gsd);
  const auto grid = cvbev::AlphaGrid::from_footprint(fp, t);
  ordered_json j;
  j["t"] = t;
  j["rows"] = grid.rows;
  j["cols"] = grid.cols;
  ordered_json rho = ordered_json::array(), alpha = ordered_json::array(),
               bounds = ordered_json::array();
  for (std::size_t br = 0; br < 3; ++br) {
    ordered_json rrow = ordered_json::array(), arow = ordered_json::array();
    for (std::size_t bc = 0; bc < 3; ++bc) {
      const std::size_t k = 3 * br + bc;
      rrow.push_back(grid.rho[k]);
      arow.push_back(grid.alpha[k]);
      const auto& b = grid.bounds[k];
      bounds.push_back({b.row_begin, b.row_end, b.col_begin, b.col_end});
    }
    rho.push_back(rrow);
    alpha.push_back(arow);
  }
  j["rho"] = rho;
  j["alpha"] = alpha;
  j["block_bounds"] = bounds;
  std::cout << j.dump(2) << "\n";
  return 0;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Street-view panorama to satellite-aligned BEV projection"};
  app.require_subcommand(1);

  std::string synth_out, scene_path, synth_id = "synthetic";
  auto* synth = app.add_subcommand("synth", "Render a synthetic oracle scene and its manifest");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--scene", scene_path, "scene JSON (default: canonical one-box scene)");
  synth->add_option("--pair-id", synth_id, "pair id (default 'synthetic')");

  std::string manifest, out_dir;
  Overrides proj_o, cmp_o;
  auto* project = app.add_subcommand("project", "Project panoramas onto satellite-aligned BEV grids");
  project->add_option("--manifest", manifest, "newline-delimited JSON manifest")->required();
  project->add_option("--out", out_dir, "output directory")->required();
  add_overrides(project, proj_o);

  auto* compare = app.add_subcommand("compare", "Render ST / GP / naive / reprojected panels");
  compare->add_option("--manifest", manifest, "newline-delimited JSON manifest")->required();
  compare->add_option("--out", out_dir, "output directory")->required();
  add_overrides(compare, cmp_o);

  std::string pred_dir, gt_dir, classes, eval_json;
  std::optional<int> ignore;
  auto* eval = app.add_subcommand("eval", "mIoU / accuracy over matched label PNGs");
  eval->add_option("--pred", pred_dir, "prediction directory")->required();
  eval->add_option("--gt", gt_dir, "ground-truth directory")->required();
  eval->add_option("--classes", classes, "comma-separated class names")->required();
  eval->add_option("--ignore", ignore, "label skipped in either raster");
  eval->add_option("--json", eval_json, "write the metrics record here");

  std::string footprint_path;
  double gsd = 70.0 / 256.0, slope = cvbev::kDefaultSlope;
  auto* alpha = app.add_subcommand("alpha", "Dump block ratios and alpha coefficients as JSON");
  alpha->add_option("--footprint", footprint_path, "footprint PNG")->required();
  alpha->add_option("--gsd", gsd, "meters per pixel");
  alpha->add_option("--t", slope, "alpha slope (default 20)");

  std::string bev_p, sat_p, flow_p, gw_p, gb_p, pw_p, pb_p, fused_p;
  auto* fuse = app.add_subcommand("fuse", "Warp, concatenate, gate and project CVBR feature maps");
  fuse->add_option("--bev", bev_p, "BEV feature map (CVBR)")->required();
  fuse->add_option("--sat", sat_p, "satellite feature map (CVBR)")->required();
  fuse->add_option("--flow", flow_p, "2-channel flow field (CVBR)")->required();
  fuse->add_option("--gate-w", gw_p, "gate weights, C_cat x C_cat")->required();
  fuse->add_option("--gate-b", gb_p, "gate bias, 1 x C_cat")->required();
  fuse->add_option("--proj-w", pw_p, "projection weights, C_out x C_cat")->required();
  fuse->add_option("--proj-b", pb_p, "projection bias, 1 x C_out")->required();
  fuse->add_option("--out", fused_p, "output CVBR (f64)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_out, scene_path, synth_id);
    if (project->parsed()) {
      const auto summary = cvbev::run_project(manifest, resolve_config(proj_o), out_dir);
      for (const auto& f : summary.written) std::cout << (fs::path(out_dir) / f).string() << "\n";
      return 0;
    }
    if (compare->parsed()) {
      const auto summary = cvbev::run_compare(manifest, resolve_config(cmp_o), out_dir);
      for (const auto& f : summary.written) std::cout << (fs::path(out_dir) / f).string() << "\n";
      return 0;
    }
    if (eval->parsed()) {
      std::optional<std::uint8_t> ignore_label;
      if (ignore) {
        if (*ignore < 0 || *ignore > 255) throw cvbev::Error("[eval] --ignore must be 0..255");
        ignore_label = static_cast<std::uint8_t>(*ignore);
      }
      const auto report = cvbev::run_eval(pred_dir, gt_dir, split_names(classes), ignore_label);
      std::cout << report.table.text;
      std::cout << "mIoU " << cvbev::format_percent(report.iou.mean) << "  Acc "
                << cvbev::format_percent(report.accuracy) << "\n";
      if (!eval_json.empty()) {
        const std::string text = report.to_json().dump(2) + "\n";
        cvbev::write_file_bytes(eval_json, std::vector<std::uint8_t>(text.begin(), text.end()));
      }
      return 0;
    }
    if (alpha->parsed()) return cmd_alpha(footprint_path, gsd, slope);
    if (fuse->parsed()) {
      cvbev::FusionWeights w{cvbev::to_matrix(cvbev::read_raw(gw_p)),
                             cvbev::to_vector(cvbev::read_raw(gb_p)),
                             cvbev::to_matrix(cvbev::read_raw(pw_p)),
                             cvbev::to_vector(cvbev::read_raw(pb_p))};
      const auto out = cvbev::fuse_aligned(cvbev::to_feature_map(cvbev::read_raw(bev_p)),
                                           cvbev::to_feature_map(cvbev::read_raw(sat_p)),
                                           cvbev::to_flow_field(cvbev::read_raw(flow_p)), w);
      cvbev::write_raw(fused_p, cvbev::from_feature_map(out));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "cvbev: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
