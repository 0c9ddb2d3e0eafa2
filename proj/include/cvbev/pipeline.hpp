#pragma once

// End-to-end runs: manifests and configs, depth -> points -> reprojection ->
// raster -> offset translation, side-by-side projection panels, and label
// evaluation over directories.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvbev/bev.hpp"
#include "cvbev/evaluation.hpp"
#include "cvbev/geometry.hpp"
#include "cvbev/guidance.hpp"
#include "cvbev/reprojection.hpp"
#include "cvbev/synthetic.hpp"
#include "json.hpp"

namespace cvbev {

// One street panorama bound to one satellite tile. Offsets give the camera
// position relative to the tile center (east/north meters).
struct PairManifest {
  std::string pair_id;
  std::string panorama_path;
  std::string depth_path;
  std::string footprint_path;
  std::string satellite_label_path;
  std::string panorama_label_path;  // optional; payload source for `project`
  double gsd = 70.0 / 256.0;
  double offset_east = 0.0;
  double offset_north = 0.0;
  double camera_height = 2.5;
  std::size_t tile_size = 256;

  void validate() const;
  // Relative paths resolve against `base`.
  std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) const;
};

PairManifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifest_to_json(const PairManifest& m);

// Newline-delimited JSON, one object per pair. Blank lines are skipped.
std::vector<PairManifest> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<PairManifest>& pairs);

struct PipelineConfig {
  BevGridSpec bev;
  ReprojectionConfig reprojection;
  double t = kDefaultSlope;
  double depth_scale = 1.0 / 256.0;
  // Overrides the manifest camera height when set.
  std::optional<double> camera_height;
  std::uint8_t empty_label = 0;
  unsigned workers = 1;  // never affects output bytes

  void validate() const;
};

// Missing keys keep their defaults. Keys: size, extent, reduction, mode, d0, t,
// fixed_alpha, clip_to_footprint, camera_height, depth_scale, empty_label, workers.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
// Echo used by run records; omits `workers`.
nlohmann::ordered_json config_to_json(const PipelineConfig& c);

struct ProjectionResult {
  BevGrid grid;  // tile-aligned (offset already applied)
  PointCloud cloud;
  ReprojectionStats stats;
};

// In-memory core of `project`. `footprint` may be null unless the mode is
// satellite-guided.
ProjectionResult project_panorama(const PanoramaDepth& depth, const FootprintMask* footprint,
                                  const Payload* payload, const PipelineConfig& config,
                                  double offset_east = 0.0, double offset_north = 0.0);

struct LoadedPair {
  PanoramaDepth depth;
  FootprintMask footprint;
  Payload payload;
};

LoadedPair load_pair(const PairManifest& m, const std::filesystem::path& base,
                     const PipelineConfig& config, bool rgb_payload = false);

struct RunSummary {
  std::vector<std::string> written;  // relative to the output directory, sorted
  nlohmann::ordered_json record;
};

// Writes labels/<id>.png, raw/<id>.cvbr, counts/<id>.cvbr and run_record.json.
RunSummary run_project(const std::filesystem::path& manifest_path, const PipelineConfig& config,
                       const std::filesystem::path& out_dir);

// ST, GP, naive (mode none) and configured-mode panels.
struct ComparePanels {
  std::array<BevGrid, 4> panels;
  static constexpr std::array<const char*, 4> kNames = {"st", "gp", "naive", "sgr"};
};

ComparePanels compare_projections(const PanoramaDepth& depth, const FootprintMask& footprint,
                                  const Payload& rgb, double camera_height,
                                  const PipelineConfig& config, double offset_east = 0.0,
                                  double offset_north = 0.0);

// Panels side by side, empty cells black.
Payload compose_panels(const ComparePanels& panels);

// Writes compare/<id>.png for each pair.
RunSummary run_compare(const std::filesystem::path& manifest_path, const PipelineConfig& config,
                       const std::filesystem::path& out_dir);

struct EvalReport {
  ConfusionMatrix cm;
  IouResult iou;
  double accuracy = 0.0;
  ClassTable table;
  std::vector<std::string> files;
  nlohmann::ordered_json to_json() const;
};

// Matches *.png by filename. Unmatched files on either side are an error.
EvalReport run_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                    const std::vector<std::string>& class_names,
                    std::optional<std::uint8_t> ignore_label = std::nullopt);

// Renders `scene` and writes panorama/, panorama_labels/, depth/, footprint/,
// interior/ and gt/ PNGs for `pair_id` under `dir`. Returns the manifest entry
// with paths relative to `dir`.
PairManifest write_synthetic_pair(const SyntheticScene& scene, const std::filesystem::path& dir,
                                  const std::string& pair_id);

// Fraction of interior-mask cells that are occupied.
double interior_coverage(const BevGrid& grid, const Raster<std::uint8_t>& interior);

LabelRaster grid_labels(const BevGrid& grid, std::uint8_t empty_label);
Payload grid_image(const BevGrid& grid);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace cvbev
