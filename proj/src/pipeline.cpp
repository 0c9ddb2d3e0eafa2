#include "cvbev/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cvbev/raster_io.hpp"

namespace fs = std::filesystem;

namespace cvbev {

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind("[", 0) == 0) throw;
    throw Error(std::string("[") + name + "] " + msg);
  } catch (const std::exception& e) {
    throw Error(std::string("[") + name + "] " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- manifests

void PairManifest::validate() const {
  if (pair_id.empty()) throw Error("manifest: pair_id is empty");
  if (pair_id.find('/') != std::string::npos || pair_id.find('\\') != std::string::npos) {
    throw Error("manifest: pair_id '" + pair_id + "' must not contain path separators");
  }
  const std::pair<const char*, const std::string*> paths[] = {
      {"panorama_path", &panorama_path},
      {"depth_path", &depth_path},
      {"footprint_path", &footprint_path},
      {"satellite_label_path", &satellite_label_path}};
  for (const auto& [name, value] : paths) {
    if (value->empty()) throw Error("manifest " + pair_id + ": " + name + " is empty");
  }
  if (!(gsd > 0.0)) throw Error("manifest " + pair_id + ": gsd must be positive");
  if (tile_size == 0) throw Error("manifest " + pair_id + ": tile_size must be at least 1");
  if (!(camera_height > 0.0)) throw Error("manifest " + pair_id + ": camera_height must be positive");
  if (!std::isfinite(offset_east) || !std::isfinite(offset_north)) {
    throw Error("manifest " + pair_id + ": offsets must be finite");
  }
}

fs::path PairManifest::resolve(const std::string& p, const fs::path& base) const {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

PairManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("manifest entry must be a JSON object");
  PairManifest m;
  try {
    m.pair_id = j.at("pair_id").get<std::string>();
    m.panorama_path = j.at("panorama_path").get<std::string>();
    m.depth_path = j.at("depth_path").get<std::string>();
    m.footprint_path = j.at("footprint_path").get<std::string>();
    m.satellite_label_path = j.at("satellite_label_path").get<std::string>();
    m.panorama_label_path = j.value("panorama_label_path", std::string{});
    m.gsd = j.at("gsd").get<double>();
    m.offset_east = j.value("offset_east", 0.0);
    m.offset_north = j.value("offset_north", 0.0);
    m.camera_height = j.value("camera_height", 2.5);
    m.tile_size = j.at("tile_size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest entry: ") + e.what());
  }
  m.validate();
  return m;
}

nlohmann::ordered_json manifest_to_json(const PairManifest& m) {
  nlohmann::ordered_json j;
  j["pair_id"] = m.pair_id;
  j["panorama_path"] = m.panorama_path;
  j["depth_path"] = m.depth_path;
  j["footprint_path"] = m.footprint_path;
  j["satellite_label_path"] = m.satellite_label_path;
  if (!m.panorama_label_path.empty()) j["panorama_label_path"] = m.panorama_label_path;
  j["gsd"] = m.gsd;
  j["offset_east"] = m.offset_east;
  j["offset_north"] = m.offset_north;
  j["camera_height"] = m.camera_height;
  j["tile_size"] = m.tile_size;
  return j;
}

std::vector<PairManifest> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open manifest");
  std::vector<PairManifest> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(manifest_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(out.back().pair_id).second) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": duplicate pair_id '" +
                  out.back().pair_id + "'");
    }
  }
  if (out.empty()) throw Error(path.string() + ": manifest has no entries");
  return out;
}

void save_manifest(const fs::path& path, const std::vector<PairManifest>& pairs) {
  std::string text;
  for (const auto& m : pairs) text += manifest_to_json(m).dump() + "\n";
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// ------------------------------------------------------------------- config

void PipelineConfig::validate() const {
  bev.validate();
  reprojection.validate();
  if (!(t >= 0.0)) throw Error("config: t must be nonnegative");
  if (!(depth_scale > 0.0)) throw Error("config: depth_scale must be positive");
  if (camera_height && !(*camera_height > 0.0)) {
    throw Error("config: camera_height must be positive");
  }
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  try {
    if (j.contains("size")) c.bev.size = j["size"].get<std::size_t>();
    if (j.contains("extent")) c.bev.extent = j["extent"].get<double>();
    if (j.contains("reduction")) c.bev.reduction = parse_reduction(j["reduction"].get<std::string>());
    if (j.contains("mode")) c.reprojection.mode = parse_reprojection_mode(j["mode"].get<std::string>());
    if (j.contains("d0")) c.reprojection.d0 = j["d0"].get<double>();
    if (j.contains("fixed_alpha")) c.reprojection.fixed_alpha = j["fixed_alpha"].get<double>();
    if (j.contains("clip_to_footprint")) {
      c.reprojection.clip_to_footprint = j["clip_to_footprint"].get<bool>();
    }
    if (j.contains("t")) c.t = j["t"].get<double>();
    if (j.contains("depth_scale")) c.depth_scale = j["depth_scale"].get<double>();
    if (j.contains("camera_height") && !j["camera_height"].is_null()) {
      c.camera_height = j["camera_height"].get<double>();
    }
    if (j.contains("empty_label")) c.empty_label = j["empty_label"].get<std::uint8_t>();
    if (j.contains("workers")) c.workers = std::max(1u, j["workers"].get<unsigned>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["size"] = c.bev.size;
  j["extent"] = c.bev.extent;
  j["reduction"] = to_string(c.bev.reduction);
  j["mode"] = to_string(c.reprojection.mode);
  j["d0"] = c.reprojection.d0;
  j["t"] = c.t;
  j["fixed_alpha"] = c.reprojection.fixed_alpha;
  j["clip_to_footprint"] = c.reprojection.clip_to_footprint;
  j["depth_scale"] = c.depth_scale;
  j["camera_height"] = c.camera_height ? nlohmann::ordered_json(*c.camera_height) : nullptr;
  j["empty_label"] = c.empty_label;
  return j;
}

// --------------------------------------------------------------- projection

ProjectionResult project_panorama(const PanoramaDepth& depth, const FootprintMask* footprint,
                                  const Payload* payload, const PipelineConfig& config,
                                  double offset_east, double offset_north) {
  config.validate();
  ProjectionResult out;
  const PointCloud initial = stage("points", [&] {
    const AngleGrid angles = compute_angle_grid(depth.height, depth.width);
    return depth_to_points(depth, angles, config.workers);
  });
  out.cloud = stage("reproject", [&] {
    ReprojectionConfig rc = config.reprojection;
    rc.center_east = 0.0;
    rc.center_north = 0.0;
    if (rc.mode != ReprojectionMode::kSatelliteGuided) {
      return reproject(initial, rc, nullptr, nullptr, &out.stats);
    }
    if (footprint == nullptr) throw Error("satellite-guided mode needs a footprint");
    footprint->validate();
    const AlphaGrid alpha = AlphaGrid::from_footprint(*footprint, config.t);
    return reproject(initial, rc, &alpha, footprint, &out.stats);
  });
  out.grid = stage("rasterize", [&] {
    return rasterize(out.cloud, config.bev, payload, config.workers);
  });
  if (offset_east != 0.0 || offset_north != 0.0) {
    out.grid = stage("translate", [&] { return translate(out.grid, offset_east, offset_north); });
  }
  return out;
}

LoadedPair load_pair(const PairManifest& m, const fs::path& base, const PipelineConfig& config,
                     bool rgb_payload) {
  LoadedPair p;
  p.depth = stage("load depth", [&] {
    return load_depth_png(m.resolve(m.depth_path, base), config.depth_scale);
  });
  p.footprint = stage("load footprint", [&] {
    const fs::path path = m.resolve(m.footprint_path, base);
    Raster<std::uint8_t> mask = read_mask_png(path);
    if (mask.rows != m.tile_size || mask.cols != m.tile_size) {
      throw Error(path.string() + ": footprint is " + std::to_string(mask.rows) + "x" +
                  std::to_string(mask.cols) + " but tile_size is " + std::to_string(m.tile_size));
    }
    FootprintMask fp = FootprintMask::centered(std::move(mask), m.gsd, m.offset_east, m.offset_north);
    fp.validate();
    return fp;
  });
  p.payload = stage("load payload", [&] {
    const std::string& src =
        (!rgb_payload && !m.panorama_label_path.empty()) ? m.panorama_label_path : m.panorama_path;
    const fs::path path = m.resolve(src, base);
    Payload payload = read_payload_png(path);
    if (payload.rows != p.depth.height || payload.cols != p.depth.width) {
      throw Error(path.string() + ": payload is " + std::to_string(payload.rows) + "x" +
                  std::to_string(payload.cols) + " but depth is " + std::to_string(p.depth.height) +
                  "x" + std::to_string(p.depth.width));
    }
    if (rgb_payload && payload.channels != 3) throw Error(path.string() + ": expected an RGB panorama");
    return payload;
  });
  return p;
}

LabelRaster grid_labels(const BevGrid& grid, std::uint8_t empty_label) {
  LabelRaster out(grid.size(), grid.size(), empty_label);
  if (grid.channels == 0) return out;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    if (!grid.cells[k].occupied) continue;
    out.data[k] = static_cast<std::uint8_t>(std::clamp(std::round(grid.values[k]), 0.f, 255.f));
  }
  return out;
}

Payload grid_image(const BevGrid& grid) {
  const std::size_t ch = grid.channels == 0 ? 1 : grid.channels;
  Payload img(Payload::Kind::kNumeric, ch, grid.size(), grid.size());
  const std::size_t plane = grid.size() * grid.size();
  for (std::size_t k = 0; k < plane; ++k) {
    if (!grid.cells[k].occupied) continue;
    for (std::size_t c = 0; c < ch; ++c) {
      img.values[c * plane + k] = grid.channels == 0 ? 255.f : grid.values[c * plane + k];
    }
  }
  return img;
}

PairManifest write_synthetic_pair(const SyntheticScene& scene, const fs::path& dir,
                                  const std::string& pair_id) {
  const SyntheticRender r = render_synthetic(scene);
  PairManifest m;
  m.pair_id = pair_id;
  m.panorama_path = "panorama/" + pair_id + ".png";
  m.panorama_label_path = "panorama_labels/" + pair_id + ".png";
  m.depth_path = "depth/" + pair_id + ".png";
  m.footprint_path = "footprint/" + pair_id + ".png";
  m.satellite_label_path = "gt/" + pair_id + ".png";
  m.gsd = scene.gsd;
  m.offset_east = scene.offset_east;
  m.offset_north = scene.offset_north;
  m.camera_height = scene.camera_height;
  m.tile_size = scene.tile_size;
  m.validate();
  write_payload_png(dir / m.panorama_path, r.pano_rgb);
  write_label_png(dir / m.panorama_label_path, r.pano_labels);
  save_depth_png(dir / m.depth_path, r.depth);
  write_mask_png(dir / m.footprint_path, r.footprint.mask);
  write_mask_png(dir / "interior" / (pair_id + ".png"), r.interior);
  write_label_png(dir / m.satellite_label_path, r.tile_labels);
  return m;
}

double interior_coverage(const BevGrid& grid, const Raster<std::uint8_t>& interior) {
  if (interior.rows != grid.size() || interior.cols != grid.size()) {
    throw Error("interior_coverage: mask is " + std::to_string(interior.rows) + "x" +
                std::to_string(interior.cols) + " but grid is " + std::to_string(grid.size()) +
                "x" + std::to_string(grid.size()));
  }
  std::size_t inside = 0, hit = 0;
  for (std::size_t k = 0; k < interior.data.size(); ++k) {
    if (interior.data[k] == 0) continue;
    ++inside;
    hit += grid.cells[k].occupied;
  }
  return inside == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(inside);
}

// ------------------------------------------------------------------ hashing

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file_bytes(path)); }

// --------------------------------------------------------------------- runs

namespace {

void check_inputs_exist(const std::vector<PairManifest>& pairs, const fs::path& base) {
  std::vector<std::string> missing;
  for (const auto& m : pairs) {
    std::vector<std::string> required = {m.panorama_path, m.depth_path, m.footprint_path,
                                         m.satellite_label_path};
    if (!m.panorama_label_path.empty()) required.push_back(m.panorama_label_path);
    for (const auto& p : required) {
      if (!fs::is_regular_file(m.resolve(p, base))) {
        missing.push_back(m.pair_id + ": " + m.resolve(p, base).string());
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "[manifest] missing input files:";
    for (const auto& s : missing) msg += "\n  " + s;
    throw Error(msg);
  }
}

// Runs job(i) for every pair on up to `workers` threads; the first error wins
// by pair order.
template <typename Job>
void for_each_pair(std::size_t n, unsigned workers, Job job) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
}

std::string write_tracked(const fs::path& out_dir, const fs::path& rel,
                          const std::vector<std::uint8_t>& bytes) {
  write_file_bytes(out_dir / rel, bytes);
  return sha256_hex(bytes);
}

RawRaster grid_raw(const BevGrid& grid) {
  RawRaster r;
  r.dtype = RawDType::kF32;
  r.channels = static_cast<std::uint32_t>(grid.channels + 1);
  r.height = r.width = static_cast<std::uint32_t>(grid.size());
  const std::size_t plane = grid.size() * grid.size();
  r.values.assign(grid.values.begin(), grid.values.end());
  r.values.resize(r.channels * plane);
  for (std::size_t k = 0; k < plane; ++k) {
    r.values[grid.channels * plane + k] = grid.cells[k].occupied
                                              ? grid.cells[k].height
                                              : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

RawRaster grid_counts(const BevGrid& grid) {
  RawRaster r;
  r.dtype = RawDType::kF32;
  r.channels = 1;
  r.height = r.width = static_cast<std::uint32_t>(grid.size());
  r.values.resize(grid.cells.size());
  for (std::size_t k = 0; k < grid.cells.size(); ++k) r.values[k] = grid.cells[k].count;
  return r;
}

}  // namespace

RunSummary run_project(const fs::path& manifest_path, const PipelineConfig& config,
                       const fs::path& out_dir) {
  config.validate();
  const auto pairs = stage("manifest", [&] { return load_manifest(manifest_path); });
  const fs::path base = manifest_path.parent_path();
  check_inputs_exist(pairs, base);
  fs::create_directories(out_dir);

  PipelineConfig inner = config;
  inner.workers = pairs.size() > 1 ? 1 : config.workers;
  std::vector<nlohmann::ordered_json> entries(pairs.size());

  for_each_pair(pairs.size(), config.workers, [&](std::size_t i) {
    const PairManifest& m = pairs[i];
    try {
      LoadedPair in = load_pair(m, base, inner);
      ProjectionResult res = project_panorama(in.depth, &in.footprint, &in.payload, inner,
                                              m.offset_east, m.offset_north);
      nlohmann::ordered_json e;
      e["pair_id"] = m.pair_id;
      nlohmann::ordered_json inputs;
      inputs["depth"] = sha256_file(m.resolve(m.depth_path, base));
      inputs["footprint"] = sha256_file(m.resolve(m.footprint_path, base));
      inputs["payload"] = sha256_file(m.resolve(
          m.panorama_label_path.empty() ? m.panorama_path : m.panorama_label_path, base));
      e["inputs"] = inputs;

      const fs::path label_rel = fs::path("labels") / (m.pair_id + ".png");
      const fs::path raw_rel = fs::path("raw") / (m.pair_id + ".cvbr");
      const fs::path count_rel = fs::path("counts") / (m.pair_id + ".cvbr");
      const auto label_bytes = stage("write", [&] {
        return encode_png(in.payload.kind == Payload::Kind::kCategorical
                              ? label_image(grid_labels(res.grid, config.empty_label))
                              : payload_image(grid_image(res.grid)));
      });
      nlohmann::ordered_json outputs;
      outputs[label_rel.generic_string()] = write_tracked(out_dir, label_rel, label_bytes);
      outputs[raw_rel.generic_string()] = write_tracked(out_dir, raw_rel, encode_raw(grid_raw(res.grid)));
      outputs[count_rel.generic_string()] =
          write_tracked(out_dir, count_rel, encode_raw(grid_counts(res.grid)));
      e["outputs"] = outputs;
      nlohmann::ordered_json stats;
      stats["points"] = res.stats.input;
      stats["shifted"] = res.stats.shifted;
      stats["discarded"] = res.stats.discarded;
      stats["occupied_cells"] = res.grid.occupied_count();
      e["stats"] = stats;
      entries[i] = std::move(e);
    } catch (const std::exception& ex) {
      throw Error("pair " + m.pair_id + ": " + ex.what());
    }
  });

  RunSummary summary;
  summary.record["command"] = "project";
  summary.record["config"] = config_to_json(config);
  summary.record["pairs"] = entries;
  const std::string text = summary.record.dump(2) + "\n";
  write_file_bytes(out_dir / "run_record.json", std::vector<std::uint8_t>(text.begin(), text.end()));
  for (const auto& m : pairs) {
    summary.written.push_back("counts/" + m.pair_id + ".cvbr");
    summary.written.push_back("labels/" + m.pair_id + ".png");
    summary.written.push_back("raw/" + m.pair_id + ".cvbr");
  }
  summary.written.push_back("run_record.json");
  std::sort(summary.written.begin(), summary.written.end());
  return summary;
}

ComparePanels compare_projections(const PanoramaDepth& depth, const FootprintMask& footprint,
                                  const Payload& rgb, double camera_height,
                                  const PipelineConfig& config, double offset_east,
                                  double offset_north) {
  ComparePanels out;
  const auto shift = [&](BevGrid g) {
    return (offset_east != 0.0 || offset_north != 0.0) ? translate(g, offset_east, offset_north) : g;
  };
  out.panels[0] = stage("st", [&] {
    return shift(ground_plane_project(rgb, camera_height, config.bev, GroundProjection::kSphericalImage));
  });
  out.panels[1] = stage("gp", [&] {
    return shift(ground_plane_project(rgb, camera_height, config.bev, GroundProjection::kFeature));
  });
  PipelineConfig naive = config;
  naive.reprojection.mode = ReprojectionMode::kNone;
  out.panels[2] =
      project_panorama(depth, &footprint, &rgb, naive, offset_east, offset_north).grid;
  out.panels[3] =
      project_panorama(depth, &footprint, &rgb, config, offset_east, offset_north).grid;
  return out;
}

Payload compose_panels(const ComparePanels& panels) {
  const std::size_t n = panels.panels[0].size();
  Payload img(Payload::Kind::kNumeric, 3, n, 4 * n);
  for (std::size_t p = 0; p < 4; ++p) {
    const BevGrid& g = panels.panels[p];
    if (g.size() != n) throw Error("compose_panels: panel sizes differ");
    const Payload tile = grid_image(g);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const std::size_t src_ch = tile.channels == 3 ? ch : 0;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) img.at(ch, r, p * n + c) = tile.at(src_ch, r, c);
      }
    }
  }
  return img;
}

RunSummary run_compare(const fs::path& manifest_path, const PipelineConfig& config,
                       const fs::path& out_dir) {
  config.validate();
  const auto pairs = stage("manifest", [&] { return load_manifest(manifest_path); });
  const fs::path base = manifest_path.parent_path();
  check_inputs_exist(pairs, base);
  PipelineConfig inner = config;
  inner.workers = pairs.size() > 1 ? 1 : config.workers;

  RunSummary summary;
  for_each_pair(pairs.size(), config.workers, [&](std::size_t i) {
    const PairManifest& m = pairs[i];
    try {
      LoadedPair in = load_pair(m, base, inner, true);
      const double h = config.camera_height.value_or(m.camera_height);
      const ComparePanels panels = compare_projections(in.depth, in.footprint, in.payload, h, inner,
                                                       m.offset_east, m.offset_north);
      stage("write", [&] {
        write_payload_png(out_dir / "compare" / (m.pair_id + ".png"), compose_panels(panels));
        return 0;
      });
    } catch (const std::exception& ex) {
      throw Error("pair " + m.pair_id + ": " + ex.what());
    }
  });
  for (const auto& m : pairs) summary.written.push_back("compare/" + m.pair_id + ".png");
  std::sort(summary.written.begin(), summary.written.end());
  summary.record["command"] = "compare";
  summary.record["config"] = config_to_json(config);
  summary.record["panels"] = {"st", "gp", "naive", to_string(config.reprojection.mode)};
  return summary;
}

// --------------------------------------------------------------- evaluation

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["files"] = files.size();
  j["miou"] = std::stod(format_percent(iou.mean));
  j["acc"] = std::stod(format_percent(accuracy));
  j["table"] = nlohmann::ordered_json::parse(table.json);
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < cm.num_classes(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < cm.num_classes(); ++c) row.push_back(cm.at(r, c));
    counts.push_back(row);
  }
  j["confusion_matrix"] = counts;
  return j;
}

namespace {

std::vector<std::string> png_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + ": not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      names.push_back(e.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

EvalReport run_eval(const fs::path& pred_dir, const fs::path& gt_dir,
                    const std::vector<std::string>& class_names,
                    std::optional<std::uint8_t> ignore_label) {
  if (class_names.empty()) throw Error("[eval] at least one class name is required");
  const auto preds = png_names(pred_dir);
  const auto gts = png_names(gt_dir);
  if (preds.empty() && gts.empty()) {
    throw Error("[eval] no PNG files in " + pred_dir.string() + " or " + gt_dir.string());
  }
  std::vector<std::string> only_pred, only_gt;
  std::set_difference(preds.begin(), preds.end(), gts.begin(), gts.end(),
                      std::back_inserter(only_pred));
  std::set_difference(gts.begin(), gts.end(), preds.begin(), preds.end(),
                      std::back_inserter(only_gt));
  if (!only_pred.empty() || !only_gt.empty()) {
    std::string msg = "[eval] unmatched files:";
    for (const auto& f : only_pred) msg += "\n  prediction only: " + f;
    for (const auto& f : only_gt) msg += "\n  ground truth only: " + f;
    throw Error(msg);
  }
  EvalReport report{ConfusionMatrix(class_names.size()), {}, 0.0, {}, preds};
  for (const auto& name : preds) {
    stage("eval", [&] {
      const LabelRaster gt = read_label_png(gt_dir / name);
      const LabelRaster pred = read_label_png(pred_dir / name);
      try {
        report.cm.accumulate(gt, pred, ignore_label);
      } catch (const Error& e) {
        throw Error(name + ": " + e.what());
      }
      return 0;
    });
  }
  report.iou = miou(report.cm);
  report.accuracy = stage("eval", [&] { return accuracy(report.cm); });
  report.table = per_class_table(report.cm, class_names);
  return report;
}

}  // namespace cvbev
