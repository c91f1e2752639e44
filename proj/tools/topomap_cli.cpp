#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topomap/topomap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_out = true) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  auto* out = cmd->add_option("--out", o.out_dir, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", o.seed, "master seed (overrides config)");
  cmd->add_option("--set", o.sets, "extra key=value config overrides")->take_all();
}

topomap::PipelineConfig build_config(const CommonOpts& o) {
  topomap::PipelineConfig cfg;
  if (!o.config_path.empty()) topomap::load_config_file(cfg, o.config_path);
  for (const std::string& kv : o.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      topomap::fail(topomap::errc::bad_config, "--set expects key=value, got '" + kv + "'");
    topomap::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.synth.seed = cfg.seed;
  topomap::validate_config(cfg);
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

json subseed_scheme() {
  return {{"scheme", "subseed(seed, tag) = splitmix64(seed + tag * 0x9E3779B97F4A7C15)"},
          {"tags",
           {{"jitter", topomap::seed_tag::jitter},
            {"base", topomap::seed_tag::base},
            {"strokes", topomap::seed_tag::strokes},
            {"roughness", topomap::seed_tag::roughness},
            {"outliers", topomap::seed_tag::outliers},
            {"rigid", topomap::seed_tag::rigid},
            {"cv", topomap::seed_tag::cv},
            {"cv_fold", "subseed(cv_seed, 1000 + fold)"},
            {"final_train", topomap::seed_tag::final_train},
            {"fisher", topomap::seed_tag::fisher}}}};
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) topomap::fail(topomap::errc::io_error, "cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
  if (!out) topomap::fail(topomap::errc::io_error, "write failed for '" + path.string() + "'");
}

json manifest_base(const char* command, const topomap::PipelineConfig& cfg) {
  return {{"command", command}, {"config", topomap::config_to_json(cfg)}, {"subseeds", subseed_scheme()}};
}

topomap::PointCloud load_cloud(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  if (ext == ".ply") return topomap::load_ply(path);
  if (ext == ".xyz" || ext == ".txt") return topomap::load_xyz(path);
  topomap::fail(topomap::errc::unsupported_format, "'" + path + "': expected a .ply or .xyz cloud");
}

int cmd_synth(const CommonOpts& o) {
  topomap::PipelineConfig cfg = build_config(o);
  fs::path out = prepare_out(o.out_dir);

  topomap::StageTimings timings;
  topomap::StageTimer timer(timings);
  topomap::LabeledCloud lc = topomap::generate_surface(cfg.synth);
  timer.lap("generate");

  topomap::write_ply((out / "cloud.ply").string(), lc.cloud, topomap::PlyFormat::binary_le);
  topomap::write_labels((out / "labels.txt").string(), lc.labels);
  timer.lap("write");

  std::size_t minority = 0;
  for (int l : lc.labels)
    if (l == 2) ++minority;
  double fraction = static_cast<double>(minority) / static_cast<double>(lc.labels.size());

  json m = manifest_base("synth", cfg);
  m["outputs"] = {"cloud.ply", "labels.txt"};
  m["points"] = lc.cloud.points.size();
  m["minority_fraction"] = fraction;
  m["timings"] = timings.to_json();
  write_json_file(out / "synth.manifest.json", m);

  std::fprintf(stderr, "[synth] %zu points, minority fraction %.4f -> %s\n", lc.cloud.points.size(),
               fraction, out.string().c_str());
  return 0;
}

int cmd_extract(const CommonOpts& o, const std::string& cloud_path, const std::string& labels_path) {
  topomap::PipelineConfig cfg = build_config(o);
  fs::path out = prepare_out(o.out_dir);

  topomap::PointCloud cloud = load_cloud(cloud_path);
  topomap::ExtractResult r = topomap::run_extract(cloud, cfg);

  topomap::write_gm1((out / "depth.gm1").string(), r.depth);
  topomap::write_gm1((out / "topo.gm1").string(), r.topo);
  topomap::write_gm1((out / "ev.gm1").string(), r.e_v);
  topomap::write_gm1((out / "ep.gm1").string(), r.e_p);
  topomap::write_gm1((out / "dgm.gm1").string(), r.dgm);
  json outputs = {"depth.gm1", "topo.gm1", "ev.gm1", "ep.gm1", "dgm.gm1"};

  if (!labels_path.empty()) {
    std::vector<int> labels = topomap::load_labels(labels_path);
    topomap::LabeledCloud lc{std::move(cloud), std::move(labels)};
    topomap::GridMap lmap = topomap::rasterize_labels(lc, r.plane, cfg.pixel_size);
    topomap::write_gm1((out / "labels.gm1").string(), lmap);
    outputs.push_back("labels.gm1");
  }

  json m = manifest_base("extract", cfg);
  m["inputs"] = {{"cloud", cloud_path}};
  if (!labels_path.empty()) m["inputs"]["labels"] = labels_path;
  m["outputs"] = outputs;
  m["plane"] = topomap::plane_to_json(r.plane);
  m["unfilled_cells"] = r.unfilled_cells;
  m["map"] = {{"width", r.depth.width}, {"height", r.depth.height}, {"pixel_size", r.depth.pixel_size}};
  m["timings"] = r.timings.to_json();
  write_json_file(out / "extract.manifest.json", m);

  std::fprintf(stderr, "[extract] %zux%zu map from %s -> %s\n", r.depth.width, r.depth.height,
               cloud_path.c_str(), out.string().c_str());
  return 0;
}

int cmd_features(const CommonOpts& o, const std::string& map_path, const std::string& labels_path,
                 const std::string& families) {
  topomap::PipelineConfig cfg = build_config(o);
  if (!families.empty()) cfg.families = topomap::families_from_string(families);
  fs::path out = prepare_out(o.out_dir);

  topomap::GridMap map = topomap::read_gm1(map_path);
  std::optional<topomap::GridMap> labels;
  if (!labels_path.empty()) {
    labels = topomap::read_gm1(labels_path);
    if (!labels->same_geometry(map))
      topomap::fail(topomap::errc::geometry_mismatch, "'" + labels_path + "' does not match the map grid");
  }

  topomap::LabeledDataset ds = topomap::run_features(map, labels ? &*labels : nullptr, cfg);
  topomap::write_csv((out / "dataset.csv").string(), ds);

  json m = manifest_base("features", cfg);
  m["inputs"] = {{"map", map_path}};
  if (!labels_path.empty()) m["inputs"]["labels"] = labels_path;
  m["outputs"] = {"dataset.csv"};
  m["rows"] = ds.n_rows();
  m["columns"] = ds.n_features;
  write_json_file(out / "features.manifest.json", m);

  std::fprintf(stderr, "[features] %zu rows x %zu columns -> %s\n", ds.n_rows(), ds.n_features,
               out.string().c_str());
  return 0;
}

int cmd_train_eval(const CommonOpts& o, const std::string& csv_path, const std::string& compare_path,
                   const std::string& holdout_path) {
  topomap::PipelineConfig cfg = build_config(o);
  fs::path out = prepare_out(o.out_dir);

  topomap::LabeledDataset data = topomap::read_csv(csv_path);
  topomap::TrainEvalResult r = topomap::run_train_eval(data, cfg);
  json metrics = topomap::train_eval_to_json(r);

  if (!compare_path.empty()) {
    topomap::LabeledDataset other = topomap::read_csv(compare_path);
    topomap::TrainEvalResult rb = topomap::run_train_eval(other, cfg);
    std::vector<double> a = topomap::per_fold_f1_minority(r.folds);
    std::vector<double> b = topomap::per_fold_f1_minority(rb.folds);
    json cmp = topomap::train_eval_to_json(rb);
    cmp["csv"] = compare_path;
    cmp["fisher_p"] =
        topomap::fisher_randomization_test(a, b, cfg.n_perm, topomap::subseed(cfg.seed, topomap::seed_tag::fisher));
    try {
      cmp["t_p"] = topomap::paired_t_test(a, b);
    } catch (const topomap::Error& e) {
      cmp["t_p"] = nullptr;  // all fold differences identical
      cmp["t_p_note"] = e.what();
    }
    metrics["compare"] = cmp;
  }

  if (!holdout_path.empty()) {
    topomap::LabeledDataset held = topomap::read_csv(holdout_path);
    std::vector<int> pred;
    pred.reserve(held.n_rows());
    for (std::size_t i = 0; i < held.n_rows(); ++i)
      pred.push_back(topomap::predict(r.model, held.row(i), held.n_features).label);
    json h = topomap::metrics_to_json(topomap::compute_metrics(pred, held.y));
    h["csv"] = holdout_path;
    metrics["holdout"] = h;
  }

  write_json_file(out / "metrics.json", metrics);
  topomap::write_model((out / "model.json").string(), r.model);

  json m = manifest_base("train-eval", cfg);
  m["inputs"] = {{"csv", csv_path}};
  if (!compare_path.empty()) m["inputs"]["compare"] = compare_path;
  if (!holdout_path.empty()) m["inputs"]["holdout"] = holdout_path;
  m["outputs"] = {"metrics.json", "model.json"};
  write_json_file(out / "train_eval.manifest.json", m);

  std::fprintf(stderr, "[train-eval] pooled f1_minority %.4f over %zu folds -> %s\n",
               r.pooled.f1_minority, r.folds.size(), out.string().c_str());
  return 0;
}

int cmd_render(const CommonOpts& o, const std::string& map_path, const std::string& style) {
  topomap::PipelineConfig cfg = build_config(o);
  (void)cfg;  // render has no tunables yet, but --config/--set stay valid
  fs::path out = prepare_out(o.out_dir);

  topomap::GridMap map = topomap::read_gm1(map_path);
  std::string stem = fs::path(map_path).stem().string();
  fs::path png = out / (stem + "_" + style + ".png");
  fs::path sidecar = out / (stem + "_" + style + ".json");

  if (style == "gray") topomap::render_gray(map, png.string(), sidecar.string());
  else if (style == "signed") topomap::render_signed(map, png.string(), sidecar.string());
  else topomap::fail(topomap::errc::bad_config, "style must be 'gray' or 'signed'");

  std::fprintf(stderr, "[render] %s -> %s\n", map_path.c_str(), png.string().c_str());
  return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path, bool ply_ascii, double pixel_size) {
  std::string in_ext = fs::path(in_path).extension().string();
  std::string out_ext = fs::path(out_path).extension().string();

  if ((in_ext == ".ply" || in_ext == ".xyz" || in_ext == ".txt") &&
      (out_ext == ".ply" || out_ext == ".xyz")) {
    topomap::PointCloud cloud = load_cloud(in_path);
    if (out_ext == ".ply")
      topomap::write_ply(out_path, cloud,
                         ply_ascii ? topomap::PlyFormat::ascii : topomap::PlyFormat::binary_le);
    else
      topomap::write_xyz(out_path, cloud);
    std::fprintf(stderr, "[convert] %zu points %s -> %s\n", cloud.points.size(), in_path.c_str(),
                 out_path.c_str());
    return 0;
  }
  if (in_ext == ".png" && out_ext == ".gm1") {
    topomap::ImageGray16 img = topomap::read_png_gray16(in_path);
    topomap::GridMap map = topomap::gray16_to_map(img, pixel_size);
    topomap::write_gm1(out_path, map);
    std::fprintf(stderr, "[convert] %zux%zu luminance map %s -> %s\n", map.width, map.height,
                 in_path.c_str(), out_path.c_str());
    return 0;
  }
  topomap::fail(topomap::errc::unsupported_format,
                "unsupported conversion '" + in_ext + "' -> '" + out_ext + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface topography extraction and classification toolchain"};
  app.require_subcommand(1);

  CommonOpts synth_o;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic engraved surface");
  add_common(synth, synth_o);

  CommonOpts extract_o;
  std::string extract_cloud, extract_labels;
  CLI::App* extract = app.add_subcommand("extract", "point cloud -> depth/topography/enhanced maps");
  add_common(extract, extract_o);
  extract->add_option("--cloud", extract_cloud, "input .ply or .xyz cloud")->required();
  extract->add_option("--labels", extract_labels, "per-point label file; also writes labels.gm1");

  CommonOpts features_o;
  std::string features_map, features_labels, features_families;
  CLI::App* features = app.add_subcommand("features", "map -> block feature dataset (csv)");
  add_common(features, features_o);
  features->add_option("--map", features_map, "input .gm1 map")->required();
  features->add_option("--labels", features_labels, "label map .gm1");
  features->add_option("--families", features_families, "comma list: ghs,sf,lbp,glcm,hog");

  CommonOpts train_o;
  std::string train_csv, train_compare, train_holdout;
  CLI::App* train = app.add_subcommand("train-eval", "cross-validate and train on a feature csv");
  add_common(train, train_o);
  train->add_option("--csv", train_csv, "feature dataset csv")->required();
  train->add_option("--compare", train_compare, "second csv; paired significance tests on per-fold f1");
  train->add_option("--holdout", train_holdout, "csv evaluated with the full-data model");

  CommonOpts render_o;
  std::string render_map, render_style = "gray";
  CLI::App* render = app.add_subcommand("render", "map -> png image");
  add_common(render, render_o);
  render->add_option("--map", render_map, "input .gm1 map")->required();
  render->add_option("--style", render_style, "gray | signed")->check(CLI::IsMember({"gray", "signed"}));

  std::string conv_in, conv_out;
  bool conv_ascii = false;
  double conv_pixel_size = 1.0;
  CLI::App* convert = app.add_subcommand("convert", "cloud format conversion; png -> gm1 luminance");
  convert->add_option("--in", conv_in, "input file")->required();
  convert->add_option("--out-file", conv_out, "output file")->required();
  convert->add_flag("--ply-ascii", conv_ascii, "write ascii ply instead of binary");
  convert->add_option("--pixel-size", conv_pixel_size, "pixel size for png -> gm1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_o);
    if (extract->parsed()) return cmd_extract(extract_o, extract_cloud, extract_labels);
    if (features->parsed()) return cmd_features(features_o, features_map, features_labels, features_families);
    if (train->parsed()) return cmd_train_eval(train_o, train_csv, train_compare, train_holdout);
    if (render->parsed()) return cmd_render(render_o, render_map, render_style);
    if (convert->parsed()) return cmd_convert(conv_in, conv_out, conv_ascii, conv_pixel_size);
  } catch (const topomap::Error& e) {
    std::cerr << "error [" << topomap::errc_name(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
