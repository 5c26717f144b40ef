// SPDX-License-Identifier: Apache-2.0
#include "layerpano/pipeline.hpp"

#include "layerpano/image_io.hpp"
#include "layerpano/metrics.hpp"
#include "layerpano/scene_io.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

namespace layerpano {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw UsageError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw UsageError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj[key].is_null()) out = obj[key].get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw UsageError("config: missing input '" + what + "'");
  if (!std::filesystem::is_regular_file(path)) throw IoError(what + " not found: " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
}

long max_rss_bytes() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return -1;
  return usage.ru_maxrss * 1024L;
}

}  // namespace

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError("config: " + msg);
  };
  check(layers >= 0, "layers must be non-negative");
  check(beta1 > 0.0, "outlier.beta1 must be positive");
  check(beta2 >= 0, "outlier.beta2 must be non-negative");
  check(!radius || *radius > 0.0, "outlier.radius must be positive");
  check(beta3 > 0.0, "beta3 must be positive");
  check(max_points >= 1, "max_points must be at least 1");
  check(training.base_iterations >= 0 && training.layer_iterations >= 0, "iteration counts must be non-negative");
  check(training.lambda >= 0.0 && training.lambda <= 1.0, "training.lambda must lie in [0, 1]");
  check(training.prune_threshold > 0.0 && training.prune_threshold < 1.0, "training.prune_threshold must lie in (0, 1)");
  check(training.view_size >= 0, "training.view_size must be non-negative");
  check(training.random_views >= 0, "training.random_views must be non-negative");
  check(training.random_view_fov > 0.0 && training.random_view_fov < 180.0, "training.random_view_fov must lie in (0, 180)");
  check(training.selector_tolerance_deg >= 0.0 && training.selector_tolerance_deg < 180.0,
        "selector.tolerance_deg must lie in [0, 180)");
  const auto& lr = training.lr;
  check(lr.position > 0 && lr.position_final > 0 && lr.scale >= 0 && lr.rotation >= 0 && lr.opacity >= 0 &&
            lr.color >= 0,
        "learning rates must be non-negative (position rates positive)");
}

json PipelineConfig::to_json() const {
  json completions_json = json::object(), depths_json = json::object();
  for (const auto& [l, p] : completions) completions_json[std::to_string(l)] = p.string();
  for (const auto& [l, p] : completion_depths) depths_json[std::to_string(l)] = p.string();
  const auto& t = training;
  return {{"inputs",
           {{"pano", pano.string()},
            {"depth", depth.string()},
            {"labels", labels.string()},
            {"labels_json", labels_json.string()},
            {"completions", completions_json},
            {"completion_depths", depths_json}}},
          {"layers", layers},
          {"dilation_radius", dilation_radius},
          {"beta3", beta3},
          {"max_points", max_points},
          {"seed", seed},
          {"out", out.string()},
          {"outlier", {{"beta1", beta1}, {"beta2", beta2}, {"radius", radius ? json(*radius) : json(nullptr)}}},
          {"selector", {{"enabled", t.use_selector}, {"tolerance_deg", t.selector_tolerance_deg}}},
          {"training",
           {{"base_iterations", t.base_iterations},
            {"layer_iterations", t.layer_iterations},
            {"lambda", t.lambda},
            {"prune_interval", t.prune_interval},
            {"prune_threshold", t.prune_threshold},
            {"view_size", t.view_size},
            {"random_views", t.random_views},
            {"random_view_fov", t.random_view_fov},
            {"lr",
             {{"position", t.lr.position},
              {"position_final", t.lr.position_final},
              {"scale", t.lr.scale},
              {"rotation", t.lr.rotation},
              {"opacity", t.lr.opacity},
              {"color", t.lr.color}}}}}};
}

PipelineConfig parse_pipeline_config(const json& doc, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    reject_unknown(doc, {"inputs", "layers", "dilation_radius", "beta3", "max_points", "seed", "out", "outlier",
                         "selector", "training",
                         // per-command sections read by the command line tool
                         "synth", "trajectory", "render", "metrics", "export"},
                   "config");
    if (doc.contains("inputs")) {
      const json& in = doc["inputs"];
      reject_unknown(in, {"pano", "depth", "labels", "labels_json", "completions", "completion_depths"}, "inputs");
      auto path = [&](const char* key, std::filesystem::path& out) {
        if (in.contains(key) && !in[key].is_null() && !in[key].get<std::string>().empty()) {
          out = resolve(base_dir, in[key].get<std::string>());
        }
      };
      path("pano", c.pano);
      path("depth", c.depth);
      path("labels", c.labels);
      path("labels_json", c.labels_json);
      for (const char* key : {"completions", "completion_depths"}) {
        if (!in.contains(key)) continue;
        auto& target = std::string(key) == "completions" ? c.completions : c.completion_depths;
        for (const auto& [layer, p] : in[key].items()) target[std::stoi(layer)] = resolve(base_dir, p.get<std::string>());
      }
    }
    read(doc, "layers", c.layers);
    read(doc, "dilation_radius", c.dilation_radius);
    read(doc, "beta3", c.beta3);
    read(doc, "max_points", c.max_points);
    read(doc, "seed", c.seed);
    if (doc.contains("out")) c.out = doc["out"].get<std::string>();
    if (doc.contains("outlier")) {
      const json& o = doc["outlier"];
      reject_unknown(o, {"beta1", "beta2", "radius"}, "outlier");
      read(o, "beta1", c.beta1);
      read(o, "beta2", c.beta2);
      if (o.contains("radius") && !o["radius"].is_null()) c.radius = o["radius"].get<double>();
    }
    if (doc.contains("selector")) {
      const json& s = doc["selector"];
      reject_unknown(s, {"enabled", "tolerance_deg"}, "selector");
      read(s, "enabled", c.training.use_selector);
      read(s, "tolerance_deg", c.training.selector_tolerance_deg);
    }
    if (doc.contains("training")) {
      const json& t = doc["training"];
      reject_unknown(t, {"base_iterations", "layer_iterations", "lambda", "prune_interval", "prune_threshold",
                         "view_size", "random_views", "random_view_fov", "lr"},
                     "training");
      read(t, "base_iterations", c.training.base_iterations);
      read(t, "layer_iterations", c.training.layer_iterations);
      read(t, "lambda", c.training.lambda);
      read(t, "prune_interval", c.training.prune_interval);
      read(t, "prune_threshold", c.training.prune_threshold);
      read(t, "view_size", c.training.view_size);
      read(t, "random_views", c.training.random_views);
      read(t, "random_view_fov", c.training.random_view_fov);
      if (t.contains("lr")) {
        const json& lr = t["lr"];
        reject_unknown(lr, {"position", "position_final", "scale", "rotation", "opacity", "color"}, "training.lr");
        read(lr, "position", c.training.lr.position);
        read(lr, "position_final", c.training.lr.position_final);
        read(lr, "scale", c.training.lr.scale);
        read(lr, "rotation", c.training.lr.rotation);
        read(lr, "opacity", c.training.lr.opacity);
        read(lr, "color", c.training.lr.color);
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.training.hash.beta3 = c.beta3;
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config: " + path.string() + ": " + e.what());
  }
  return parse_pipeline_config(doc, path.parent_path().empty() ? "." : path.parent_path());
}

double median_scene_depth(const GaussianScene& scene) {
  require(!scene.empty(), "median_scene_depth: empty scene");
  std::vector<double> d(static_cast<std::size_t>(scene.size()));
  for (Eigen::Index i = 0; i < scene.size(); ++i) d[static_cast<std::size_t>(i)] = scene.mean(i).norm();
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

BuildResult run_build(const PipelineConfig& config, const StageObserver& on_stage) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); };
  config.validate();
  BuildResult result;

  // Inputs are checked in full before any work starts.
  require_file(config.pano, "pano");
  require_file(config.depth, "depth");
  if (!config.labels.empty() || !config.labels_json.empty()) {
    require_file(config.labels, "labels");
    require_file(config.labels_json, "labels_json");
  }
  for (const auto& [l, p] : config.completions) require_file(p, "completion for layer " + std::to_string(l));
  for (const auto& [l, p] : config.completion_depths) require_file(p, "completion depth for layer " + std::to_string(l));

  auto t0 = clock::now();
  const Panorama reference(load_rgb(config.pano), load_depth(config.depth));
  std::vector<AssetMask> assets;
  if (!config.labels.empty()) {
    assets = load_asset_masks(config.labels, config.labels_json);
    for (const auto& a : assets) {
      require(same_size(a.mask, reference.width(), reference.height()), "labels: size differs from the panorama");
    }
  }
  ExternalLayers external;
  for (const auto& [l, p] : config.completions) external.completions[l] = load_rgb(p);
  for (const auto& [l, p] : config.completion_depths) external.depths[l] = load_depth(p);

  std::filesystem::create_directories(config.out);
  const StackOptions options{config.layers, config.dilation_radius};
  result.stack = build_layer_stack(reference, assets, options, external);
  const LayerStack& stack = result.stack;
  save_layer_stack(config.out / "stack", stack);
  for (const auto& w : stack.warnings) result.warnings.push_back(w);
  const double stack_seconds = seconds_since(t0);

  // Point clouds per layer: the full background, then each layer's raw asset region.
  t0 = clock::now();
  const int n = stack.layer_count;
  std::vector<PointCloud> clouds;
  std::vector<Eigen::Index> lifted;
  for (int l = 0; l <= n; ++l) {
    const Mask* mask = l == 0 ? nullptr : &stack.masks[static_cast<std::size_t>(l - 1)];
    clouds.push_back(lift_panorama(stack.panoramas[static_cast<std::size_t>(l)],
                                   stack.depths[static_cast<std::size_t>(l)], mask, static_cast<std::uint32_t>(l)));
    lifted.push_back(clouds.back().size());
  }
  const double radius = config.radius.value_or(default_outlier_radius(clouds[0]));
  const OutlierParams outlier{config.beta1, config.beta2, radius};
  PointCloud combined;
  combined.resize(0);
  for (int l = 0; l <= n; ++l) {
    OutlierReport report;
    PointCloud kept = remove_stretched_outliers(clouds[static_cast<std::size_t>(l)], outlier, &report);
    const Eigen::Index removed = report.removed_isolated + report.removed_sparse;
    if (report.input > 0 && 2 * removed > report.input) {
      result.warnings.push_back("outlier filter removed " + std::to_string(removed) + " of " +
                                std::to_string(report.input) + " points of layer " + std::to_string(l) +
                                "; beta1/radius may be too small for the depth scale");
    }
    if (l == 0 && kept.empty()) {
      throw DomainError("outlier filter removed every background point (beta1 = " + std::to_string(config.beta1) +
                        ", radius = " + std::to_string(radius) + "); raise beta1 to match the point spacing");
    }
    combined.append(kept);
  }
  combined = downsample(combined, config.max_points, derive_seed(config.seed, 1000));
  std::filesystem::create_directories(config.out / "clouds");
  std::vector<PointCloud> per_layer(static_cast<std::size_t>(n + 1));
  for (int l = 0; l <= n; ++l) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < combined.size(); ++i) {
      if (combined.layer_ids[i] == static_cast<std::uint32_t>(l)) idx.push_back(i);
    }
    per_layer[static_cast<std::size_t>(l)] = combined.subset(idx);
    write_ply(config.out / "clouds" / ("layer_" + std::to_string(l) + ".ply"), per_layer[static_cast<std::size_t>(l)]);
  }
  const double cloud_seconds = seconds_since(t0);

  // Base stage, then one stage per layer from far to near.
  t0 = clock::now();
  TrainingConfig training = config.training;
  training.hash.beta3 = config.beta3;
  {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < per_layer[0].size(); ++i) d.push_back(per_layer[0].positions.col(i).norm());
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    training.scene_extent = d[d.size() / 2];
  }
  const int view_size = training.view_size > 0 ? training.view_size : std::max(16, stack.width() / 4);
  GaussianScene& scene = result.scene;
  double peak_bytes = 0.0;
  const double view_bytes = (6.0 + training.random_views) * view_size * view_size * 3.0 * sizeof(double);
  auto account = [&](Eigen::Index gaussians) {
    // parameters, gradient and two Adam moments
    peak_bytes = std::max(peak_bytes, gaussians * 4.0 * param::kRows * sizeof(double) + view_bytes);
  };

  for (int l = 0; l <= n; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const auto views = supervision_views(Panorama(stack.panoramas[ul]), view_size, training.random_views,
                                         training.random_view_fov, derive_seed(config.seed, 2 * ul));
    LayerLog log;
    log.layer = l;
    log.points_lifted = lifted[ul];
    log.points_kept = per_layer[ul].size();
    if (l == 0) {
      scene.append(init_gaussians(per_layer[0], 0));
      account(scene.size());
      log.stage = optimize_base(scene, views, training.base_iterations, training, derive_seed(config.seed, 2 * ul + 1));
    } else {
      account(scene.size() + per_layer[ul].size());
      log.stage = optimize_layer(scene, views, per_layer[ul], static_cast<std::uint32_t>(l), training.layer_iterations,
                                 training, derive_seed(config.seed, 2 * ul + 1));
      if (per_layer[ul].empty()) result.warnings.push_back("layer " + std::to_string(l) + " has no points to add");
    }
    if (on_stage) on_stage(l, scene, log.stage);
    result.layers.push_back(std::move(log));
  }
  const double optimize_seconds = seconds_since(t0);

  save_lpsl(config.out / "scene.lpsl", scene);
  json provenance = json::object();
  provenance["pano"] = sha256_file(config.pano);
  provenance["depth"] = sha256_file(config.depth);
  if (!config.labels.empty()) {
    provenance["labels"] = sha256_file(config.labels);
    provenance["labels_json"] = sha256_file(config.labels_json);
  }
  for (const auto& [l, p] : config.completions) provenance["completion_" + std::to_string(l)] = sha256_file(p);
  for (const auto& [l, p] : config.completion_depths) provenance["completion_depth_" + std::to_string(l)] = sha256_file(p);
  write_json(config.out / "scene.json", scene_manifest(scene, config.out / "scene.lpsl", config.to_json(), provenance));

  json layers = json::array();
  for (const auto& l : result.layers) {
    layers.push_back({{"layer", l.layer},
                      {"points_lifted", l.points_lifted},
                      {"points_kept", l.points_kept},
                      {"gaussians_added", l.stage.added},
                      {"gaussians_activated", l.stage.activated},
                      {"gaussians_pruned", l.stage.pruned},
                      {"iterations", l.stage.iterations},
                      {"initial_loss", l.stage.initial_loss},
                      {"final_loss", l.stage.final_loss},
                      {"seconds", l.stage.seconds}});
  }
  result.log = {{"layers", layers},
                {"layer_count", n},
                {"total_gaussians", scene.size()},
                {"peak_memory_bytes_estimate", peak_bytes},
                {"max_rss_bytes", max_rss_bytes()},
                {"stage_seconds", {{"stack", stack_seconds}, {"clouds", cloud_seconds}, {"optimize", optimize_seconds}}},
                {"outlier", {{"beta1", config.beta1}, {"beta2", config.beta2}, {"radius", radius}}},
                {"warnings", result.warnings}};
  write_json(config.out / "run_log.json", result.log);
  return result;
}

json trajectory_to_json(const Trajectory& t) {
  json poses = json::array();
  for (std::size_t k = 0; k < t.poses.size(); ++k) {
    const auto& c = t.poses[k];
    poses.push_back({{"position", {c.position.x(), c.position.y(), c.position.z()}},
                     {"orientation", {c.orientation.w(), c.orientation.x(), c.orientation.y(), c.orientation.z()}},
                     {"fov_deg", c.fov_deg},
                     {"width", c.width},
                     {"height", c.height},
                     {"azimuth_deg", t.azimuth_deg[k]},
                     {"elevation_deg", t.elevation_deg[k]},
                     {"group", t.group[k]}});
  }
  return {{"kind", to_string(t.kind)}, {"poses", poses}};
}

Trajectory trajectory_from_json(const json& doc) {
  try {
    Trajectory t;
    t.kind = parse_trajectory_kind(doc.at("kind").get<std::string>());
    for (const auto& p : doc.at("poses")) {
      PinholeCamera c;
      const auto pos = p.at("position").get<std::vector<double>>();
      const auto q = p.at("orientation").get<std::vector<double>>();
      if (pos.size() != 3 || q.size() != 4) throw UsageError("trajectory: malformed pose");
      c.position = Eigen::Vector3d(pos[0], pos[1], pos[2]);
      c.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
      c.fov_deg = p.at("fov_deg").get<double>();
      c.width = p.at("width").get<int>();
      c.height = p.at("height").get<int>();
      c.validate();
      t.poses.push_back(c);
      t.azimuth_deg.push_back(p.value("azimuth_deg", 0.0));
      t.elevation_deg.push_back(p.value("elevation_deg", 0.0));
      t.group.push_back(p.value("group", 0));
    }
    if (t.poses.empty()) throw UsageError("trajectory: no poses");
    return t;
  } catch (const json::exception& e) {
    throw UsageError(std::string("trajectory: ") + e.what());
  }
}

std::vector<double> render_trajectory(const GaussianScene& scene, const Trajectory& trajectory,
                                      const std::filesystem::path& out_dir) {
  require(!trajectory.poses.empty(), "render_trajectory: empty trajectory");
  std::filesystem::create_directories(out_dir);
  std::vector<double> holes;
  std::ofstream csv(out_dir / "coverage.csv");
  if (!csv) throw IoError("cannot write " + (out_dir / "coverage.csv").string());
  csv << "frame,hole_fraction\n";
  for (std::size_t k = 0; k < trajectory.poses.size(); ++k) {
    const RenderOutput out = render_pinhole(scene, trajectory.poses[k]);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", k);
    save_png(out_dir / name, out.color);
    holes.push_back(hole_fraction(out.alpha));
    csv << k << "," << holes.back() << "\n";
  }
  return holes;
}

void export_scene(const std::filesystem::path& scene_file, const std::filesystem::path& out_dir) {
  const GaussianScene scene = load_lpsl(scene_file);
  std::filesystem::create_directories(out_dir);
  save_lpsl(out_dir / "scene.lpsl", scene);
  write_json(out_dir / "scene.json",
             scene_manifest(scene, out_dir / "scene.lpsl", json::object(), {{"source", sha256_file(scene_file)}}));
  PointCloud means;
  means.resize(scene.size());
  means.source_pixels.setConstant(-1);
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    means.positions.col(i) = scene.mean(i);
    means.colors.col(i) = scene.color(i);
    means.layer_ids[i] = scene.layer_id(i);
  }
  write_ply(out_dir / "means.ply", means);
}

}  // namespace layerpano
