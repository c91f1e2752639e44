#pragma once

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "topomap/classify.hpp"
#include "topomap/features.hpp"
#include "topomap/planefit.hpp"
#include "topomap/pointcloud.hpp"
#include "topomap/raster.hpp"
#include "topomap/synth.hpp"
#include "topomap/topo.hpp"

namespace topomap {

/// Everything the pipeline commands can be configured with, one flat
/// key=value namespace. Unknown keys are rejected so typos cannot silently
/// fall back to defaults.
struct PipelineConfig {
  double pixel_size = 0.065;     // mm per pixel
  double structure_size = 4.0;   // mm; kernel support = structure_size / pixel_size
  double epsilon = 1e-4;         // mm; log floor
  std::size_t fill_rounds = 64;  // hole-filling iteration cap
  std::size_t block_size = 32;   // pixels
  std::size_t stride = 16;       // pixels
  double theta = 0.5;            // class-2 fraction for a block to be labeled 2
  std::vector<Family> families = {Family::ghs, Family::sf};
  std::size_t n_rounds = 50;
  std::size_t k_folds = 10;
  std::size_t n_perm = 10000;
  std::size_t ghs_bins = 64;
  std::size_t ghs_coef = 30;
  std::size_t glcm_levels = 16;
  std::uint64_t seed = 0;
  SynthParams synth;  // synth.seed is overwritten with `seed` at use time
};

// Sub-seed tags; every random stream in the toolchain derives from the one
// config seed through subseed(seed, tag).
namespace seed_tag {
inline constexpr std::uint64_t jitter = 1, base = 2, strokes = 3, roughness = 4, outliers = 5,
                               rigid = 6, cv = 10, final_train = 11, fisher = 12;
}

inline std::string families_to_string(const std::vector<Family>& fams) {
  std::string s;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    if (i) s += ",";
    s += family_name(fams[i]);
  }
  return s;
}

inline std::vector<Family> families_from_string(const std::string& s) {
  std::vector<Family> fams;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t b = tok.find_first_not_of(" \t");
    std::size_t e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    fams.push_back(family_from_name(tok.substr(b, e - b + 1)));
  }
  if (fams.empty()) fail(errc::bad_config, "families list is empty");
  return fams;
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(errc::bad_config, "config key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(errc::bad_config, "config key '" + key + "': cannot parse '" + value + "' as a non-negative integer");
  }
}

}  // namespace detail

inline void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_real;
  using detail::parse_uint;
  if (key == "pixel_size") cfg.pixel_size = parse_real(key, value);
  else if (key == "structure_size") cfg.structure_size = parse_real(key, value);
  else if (key == "epsilon") cfg.epsilon = parse_real(key, value);
  else if (key == "fill_rounds") cfg.fill_rounds = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "block_size") cfg.block_size = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "stride") cfg.stride = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "theta") cfg.theta = parse_real(key, value);
  else if (key == "families") cfg.families = families_from_string(value);
  else if (key == "n_rounds") cfg.n_rounds = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "k_folds") cfg.k_folds = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "n_perm") cfg.n_perm = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "ghs_bins") cfg.ghs_bins = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "ghs_coef") cfg.ghs_coef = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "glcm_levels") cfg.glcm_levels = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "extent_w") cfg.synth.extent_w = parse_real(key, value);
  else if (key == "extent_h") cfg.synth.extent_h = parse_real(key, value);
  else if (key == "sample_spacing") cfg.synth.sample_spacing = parse_real(key, value);
  else if (key == "curvature_amp") cfg.synth.curvature_amp = parse_real(key, value);
  else if (key == "groove_depth") cfg.synth.groove_depth = parse_real(key, value);
  else if (key == "groove_width") cfg.synth.groove_width = parse_real(key, value);
  else if (key == "roughness_sigma") cfg.synth.roughness_sigma = parse_real(key, value);
  else if (key == "outlier_fraction") cfg.synth.outlier_fraction = parse_real(key, value);
  else if (key == "outlier_amp") cfg.synth.outlier_amp = parse_real(key, value);
  else if (key == "target_minority_fraction") cfg.synth.target_minority_fraction = parse_real(key, value);
  else fail(errc::bad_config, "unknown config key '" + key + "'");
}

/// Flat key=value config file; '#' starts a comment, blank lines ignored.
inline void load_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    std::string body = line.substr(b, e - b + 1);
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      fail(errc::bad_config, "'" + path + "' line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      std::size_t x = s.find_first_not_of(" \t");
      if (x == std::string::npos) return std::string();
      std::size_t y = s.find_last_not_of(" \t");
      return s.substr(x, y - x + 1);
    };
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail(errc::bad_config, "'" + path + "' line " + std::to_string(line_no) + ": empty key");
    set_config_value(cfg, key, value);
  }
}

inline void validate_config(const PipelineConfig& cfg) {
  if (!(cfg.pixel_size > 0.0)) fail(errc::bad_config, "pixel_size must be positive");
  if (!(cfg.structure_size > 0.0)) fail(errc::bad_config, "structure_size must be positive");
  if (!(cfg.epsilon > 0.0)) fail(errc::bad_config, "epsilon must be positive");
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0) fail(errc::bad_config, "theta must be in (0, 1]");
  if (cfg.block_size < 16) fail(errc::bad_config, "block_size must be at least 16");
  if (cfg.stride == 0) fail(errc::bad_config, "stride must be positive");
  if (cfg.n_rounds == 0) fail(errc::bad_config, "n_rounds must be at least 1");
  if (cfg.k_folds < 2) fail(errc::bad_config, "k_folds must be at least 2");
  if (cfg.n_perm < 1000) fail(errc::bad_config, "n_perm must be at least 1000");
  if (cfg.ghs_bins == 0 || cfg.ghs_coef == 0 || cfg.ghs_coef > cfg.ghs_bins)
    fail(errc::bad_config, "need 0 < ghs_coef <= ghs_bins");
  if (cfg.glcm_levels < 2) fail(errc::bad_config, "glcm_levels must be at least 2");
  validate(cfg.synth);
}

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j = synth_params_to_json(cfg.synth);
  j.erase("seed");  // one seed rules all commands; recorded once below
  j["pixel_size"] = cfg.pixel_size;
  j["structure_size"] = cfg.structure_size;
  j["epsilon"] = cfg.epsilon;
  j["fill_rounds"] = cfg.fill_rounds;
  j["block_size"] = cfg.block_size;
  j["stride"] = cfg.stride;
  j["theta"] = cfg.theta;
  j["families"] = families_to_string(cfg.families);
  j["n_rounds"] = cfg.n_rounds;
  j["k_folds"] = cfg.k_folds;
  j["n_perm"] = cfg.n_perm;
  j["ghs_bins"] = cfg.ghs_bins;
  j["ghs_coef"] = cfg.ghs_coef;
  j["glcm_levels"] = cfg.glcm_levels;
  j["seed"] = cfg.seed;
  return j;
}

inline nlohmann::json plane_to_json(const SupportPlane& p) {
  auto vec = [](double x, double y, double z) { return nlohmann::json::array({x, y, z}); };
  return {{"centroid", vec(p.centroid.x, p.centroid.y, p.centroid.z)},
          {"normal", vec(p.normal.x, p.normal.y, p.normal.z)},
          {"basis_u", vec(p.basis_u.x, p.basis_u.y, p.basis_u.z)},
          {"basis_v", vec(p.basis_v.x, p.basis_v.y, p.basis_v.z)}};
}

// --- extraction --------------------------------------------------------------

struct StageTimings {
  std::vector<std::pair<std::string, double>> ms;

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [name, t] : ms) j[name] = t;
    return j;
  }
};

class StageTimer {
 public:
  explicit StageTimer(StageTimings& out) : out_(out), last_(clock::now()) {}
  void lap(const std::string& name) {
    auto now = clock::now();
    out_.ms.emplace_back(name, std::chrono::duration<double, std::milli>(now - last_).count());
    last_ = now;
  }

 private:
  using clock = std::chrono::steady_clock;
  StageTimings& out_;
  clock::time_point last_;
};

struct ExtractResult {
  SupportPlane plane;
  GridMap depth;  // hole-filled; positive depth points away from the viewer
  GridMap topo;   // positive = valley, negative = peak
  GridMap e_v;
  GridMap e_p;
  GridMap dgm;
  std::size_t unfilled_cells = 0;
  StageTimings timings;
};

/// Depth values grow away from the viewer (the support-plane normal points
/// at the viewer), so engraved grooves come out as positive topography —
/// valleys — after compensation.
inline ProjectedPoints project_depth(const PointCloud& cloud, const SupportPlane& plane) {
  ProjectedPoints proj = project_to_plane(cloud, plane);
  for (double& d : proj.d) d = -d;
  return proj;
}

inline ExtractResult run_extract(const PointCloud& cloud, const PipelineConfig& cfg) {
  ExtractResult r;
  StageTimer timer(r.timings);

  r.plane = fit_support_plane(cloud);
  timer.lap("fit_plane");

  ProjectedPoints proj = project_depth(cloud, r.plane);
  timer.lap("project");

  GridMap raw = rasterize(proj, cfg.pixel_size);
  timer.lap("rasterize");

  auto [filled, unfilled] = fill_holes(raw, cfg.fill_rounds);
  r.depth = std::move(filled);
  r.unfilled_cells = unfilled;
  timer.lap("fill_holes");

  GaussianKernel kernel = make_gaussian_kernel(cfg.structure_size, cfg.pixel_size);
  r.topo = extract_topography(r.depth, kernel);
  timer.lap("extract_topography");

  auto [valleys, peaks] = split_peaks_valleys(r.topo);
  r.e_v = enhance(valleys, kernel, cfg.epsilon);
  r.e_p = enhance(peaks, kernel, cfg.epsilon);
  timer.lap("enhance");

  r.dgm = depth_gradient_map(r.depth);
  timer.lap("dgm");
  return r;
}

// --- features ----------------------------------------------------------------

/// Range of the valid cells, used as the GHS histogram window.
inline std::pair<double, double> map_value_range(const GridMap& map) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < map.cells(); ++c) {
    if (!map.valid[c]) continue;
    if (!any) { lo = hi = map.values[c]; any = true; }
    lo = std::min(lo, map.values[c]);
    hi = std::max(hi, map.values[c]);
  }
  if (!any) fail(errc::all_invalid, "map has no valid cells");
  return {lo, hi};
}

inline FeatureParams feature_params(const PipelineConfig& cfg, const GridMap& map) {
  FeatureParams p;
  p.ghs_bins = cfg.ghs_bins;
  p.ghs_coef = cfg.ghs_coef;
  p.value_range = map_value_range(map);
  p.glcm_levels = cfg.glcm_levels;
  return p;
}

inline LabeledDataset run_features(const GridMap& map, const GridMap* labels, const PipelineConfig& cfg) {
  std::vector<Block> blocks = blockify(map, labels, cfg.block_size, cfg.stride, cfg.theta);
  return assemble_dataset(blocks, cfg.families, feature_params(cfg, map));
}

// --- training / evaluation ----------------------------------------------------

struct TrainEvalResult {
  std::vector<Metrics> folds;
  Metrics pooled;
  double mean_f1_minority = 0.0;
  BoostedModel model;  // trained on the full dataset
};

inline TrainEvalResult run_train_eval(const LabeledDataset& data, const PipelineConfig& cfg) {
  TrainEvalResult r;
  r.folds = cross_validate(data, cfg.k_folds, cfg.n_rounds, subseed(cfg.seed, seed_tag::cv));
  r.pooled = pooled_metrics(r.folds);
  for (const Metrics& m : r.folds) r.mean_f1_minority += m.f1_minority;
  r.mean_f1_minority /= static_cast<double>(r.folds.size());
  r.model = train_rusboost(data, cfg.n_rounds, subseed(cfg.seed, seed_tag::final_train));
  return r;
}

inline nlohmann::json train_eval_to_json(const TrainEvalResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const Metrics& m : r.folds) folds.push_back(metrics_to_json(m));
  return {{"folds", folds},
          {"pooled", metrics_to_json(r.pooled)},
          {"mean_f1_minority", r.mean_f1_minority}};
}

inline std::vector<double> per_fold_f1_minority(const std::vector<Metrics>& folds) {
  std::vector<double> out;
  out.reserve(folds.size());
  for (const Metrics& m : folds) out.push_back(m.f1_minority);
  return out;
}

}  // namespace topomap
