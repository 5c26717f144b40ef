// SPDX-License-Identifier: Apache-2.0
//
// layerpano command line: synth, build, trajectory, render, metrics, export.
// Failures print {"error": {"type": ..., "message": ...}} to stderr.
#include "layerpano/image_io.hpp"
#include "layerpano/metrics.hpp"
#include "layerpano/pipeline.hpp"
#include "layerpano/scene_io.hpp"
#include "layerpano/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace layerpano;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitIo = 4;
constexpr int kExitInternal = 1;

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
  return code;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

// Arguments taken from the config file section of a subcommand; the command
// line comes after them, so explicit flags win.
std::vector<std::string> config_arguments(const std::vector<std::string>& args) {
  auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
  auto cfg = std::find(args.begin(), args.end(), "--config");
  if (sub == args.end() || cfg == args.end() || cfg + 1 == args.end() || *sub == "build") return {};
  const json doc = read_json_file(*(cfg + 1));
  std::vector<std::string> out;
  auto add = [&out](const std::string& key, const json& value) {
    if (value.is_array()) {
      for (const auto& v : value) out.insert(out.end(), {"--" + key, v.is_string() ? v.get<std::string>() : v.dump()});
    } else if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
    } else {
      out.insert(out.end(), {"--" + key, value.is_string() ? value.get<std::string>() : value.dump()});
    }
  };
  if (doc.contains("seed")) add("seed", doc["seed"]);
  if (doc.contains(*sub) && doc[*sub].is_object()) {
    for (const auto& [key, value] : doc[*sub].items()) add(key, value);
  }
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output path");
  app->add_option("--config", c.config, "JSON configuration file");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const auto from_config = config_arguments(args);
    std::vector<std::string> merged;
    // Subcommand name first, then config values, then the explicit command line.
    auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
    if (sub != args.end()) {
      merged.assign(args.begin(), sub + 1);
      merged.insert(merged.end(), from_config.begin(), from_config.end());
      merged.insert(merged.end(), sub + 1, args.end());
    } else {
      merged = args;
    }
    std::reverse(merged.begin(), merged.end());

    CLI::App app{"Layered 3D panorama pipeline"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Common common;

    // synth
    auto* synth = app.add_subcommand("synth", "write a procedural fixture scene");
    add_common(synth, common);
    SynthSpec spec;
    synth->add_option("--assets", spec.asset_count, "number of assets")->check(CLI::NonNegativeNumber);
    synth->add_option("--width", spec.width, "panorama width (twice the height)");
    synth->add_option("--height", spec.height, "panorama height");
    synth->add_option("--patch-depth", spec.patch_depth, "radial depth of the first patch");

    // build
    auto* build = app.add_subcommand("build", "build the layered gaussian scene");
    add_common(build, common);
    std::string pano, depth, labels, labels_json;
    int layers = 0, base_iters = 0, layer_iters = 0, beta2 = 0;
    double beta1 = 0, beta3 = 0, radius = 0, lambda = 0;
    Eigen::Index max_points = 0;
    bool no_selector = false;
    auto* o_pano = build->add_option("--pano", pano, "reference panorama (PNG/JPEG)");
    auto* o_depth = build->add_option("--depth", depth, "reference depth (PFM or 16-bit PNG in mm)");
    auto* o_labels = build->add_option("--labels", labels, "16-bit asset label map");
    auto* o_labels_json = build->add_option("--labels-json", labels_json, "label sidecar JSON");
    auto* o_layers = build->add_option("--layers", layers, "number of depth layers N");
    auto* o_beta1 = build->add_option("--beta1", beta1, "outlier distance threshold");
    auto* o_beta2 = build->add_option("--beta2", beta2, "outlier cell count threshold");
    auto* o_beta3 = build->add_option("--beta3", beta3, "log grid scale");
    auto* o_radius = build->add_option("--radius", radius, "outlier grid cell size");
    auto* o_base = build->add_option("--base-iterations", base_iters, "base stage iterations");
    auto* o_layer = build->add_option("--layer-iterations", layer_iters, "iterations per layer stage");
    auto* o_lambda = build->add_option("--lambda", lambda, "D-SSIM weight");
    auto* o_max = build->add_option("--max-points", max_points, "point budget N_max");
    build->add_flag("--no-selector", no_selector, "disable the gaussian selector");

    // trajectory
    auto* traj = app.add_subcommand("trajectory", "generate camera poses");
    add_common(traj, common);
    std::string kind;
    TrajectoryParams tp;
    double scale = 1.0;
    std::string scale_scene;
    std::vector<double> elevations;
    traj->add_option("--kind", kind, "sweep, zigzag or hemisphere")->required();
    traj->add_option("--frames", tp.frames, "frames per sweep or zigzag");
    auto* o_elev = traj->add_option("--elevation", elevations, "sweep elevations in degrees (positive up)");
    o_elev->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    traj->add_option("--segments", tp.segments, "zigzag segments");
    auto* o_amp = traj->add_option("--amplitude", tp.amplitude, "zigzag lateral offset, in units of the scale");
    auto* o_len = traj->add_option("--length", tp.length, "zigzag forward travel, in units of the scale");
    auto* o_rad = traj->add_option("--radius", tp.radius, "hemisphere radius, in units of the scale");
    traj->add_option("--lift", tp.lift_deg, "hemisphere elevation of the positions in degrees");
    traj->add_option("--width", tp.width, "frame width");
    traj->add_option("--height", tp.height, "frame height");
    traj->add_option("--fov", tp.fov_deg, "horizontal field of view in degrees");
    traj->add_option("--scale", scale, "scene scale (median depth) for zigzag and hemisphere sizes");
    traj->add_option("--scene", scale_scene, "LPSL scene whose median depth sets the scale");

    // render
    auto* render = app.add_subcommand("render", "render a trajectory to PNG frames");
    add_common(render, common);
    std::string render_scene, render_traj;
    render->add_option("--scene", render_scene, "LPSL scene file")->required();
    render->add_option("--trajectory", render_traj, "trajectory JSON from the trajectory command")->required();

    // metrics
    auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM between two frame sets");
    add_common(metrics, common);
    std::vector<std::string> renders, references;
    metrics->add_option("--renders", renders, "rendered frames (files or one directory)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->required();
    metrics->add_option("--references", references, "reference frames (files or one directory)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->required();

    // export
    auto* exp = app.add_subcommand("export", "bundle a scene for the viewer");
    add_common(exp, common);
    std::string export_scene_file;
    exp->add_option("--scene", export_scene_file, "LPSL scene file")->required();

    try {
      app.parse(merged);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      return fail("usage", e.what(), kExitUsage);
    }

    if (synth->parsed()) {
      spec.seed = common.seed;
      const SynthScene scene = synth_scene(spec);
      const fs::path out = common.out.empty() ? "fixture" : common.out;
      save_synth_scene(out, spec, scene);
      std::cout << json{{"status", "ok"}, {"out", out.string()}, {"assets", scene.assets.size()}}.dump() << "\n";
    } else if (build->parsed()) {
      PipelineConfig cfg = common.config.empty() ? PipelineConfig{} : load_pipeline_config(common.config);
      if (build->count("--seed")) cfg.seed = common.seed;
      if (!common.out.empty()) cfg.out = common.out;
      if (o_pano->count()) cfg.pano = pano;
      if (o_depth->count()) cfg.depth = depth;
      if (o_labels->count()) cfg.labels = labels;
      if (o_labels_json->count()) cfg.labels_json = labels_json;
      if (o_layers->count()) cfg.layers = layers;
      if (o_beta1->count()) cfg.beta1 = beta1;
      if (o_beta2->count()) cfg.beta2 = beta2;
      if (o_beta3->count()) cfg.beta3 = beta3;
      if (o_radius->count()) cfg.radius = radius;
      if (o_base->count()) cfg.training.base_iterations = base_iters;
      if (o_layer->count()) cfg.training.layer_iterations = layer_iters;
      if (o_lambda->count()) cfg.training.lambda = lambda;
      if (o_max->count()) cfg.max_points = max_points;
      if (no_selector) cfg.training.use_selector = false;
      cfg.training.hash.beta3 = cfg.beta3;
      const BuildResult result = run_build(cfg);
      std::cout << json{{"status", "ok"},
                        {"out", cfg.out.string()},
                        {"gaussians", result.scene.size()},
                        {"warnings", result.warnings}}
                       .dump()
                << "\n";
    } else if (traj->parsed()) {
      if (!scale_scene.empty()) scale = median_scene_depth(load_lpsl(scale_scene));
      if (!(scale > 0.0)) throw UsageError("--scale must be positive");
      if (!elevations.empty()) tp.elevations_deg = elevations;
      // Sizes are relative to the scene scale; defaults follow the documented fractions.
      tp.amplitude = (o_amp->count() ? tp.amplitude : 0.3) * scale;
      tp.length = (o_len->count() ? tp.length : 0.3) * scale;
      tp.radius = (o_rad->count() ? tp.radius : 0.1) * scale;
      const Trajectory t = generate_trajectory(kind, tp);
      const fs::path out = common.out.empty() ? "trajectory.json" : common.out;
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      std::ofstream(out) << trajectory_to_json(t).dump(2) << "\n";
      std::cout << json{{"status", "ok"}, {"out", out.string()}, {"poses", t.poses.size()}}.dump() << "\n";
    } else if (render->parsed()) {
      const GaussianScene scene = load_lpsl(render_scene);
      const Trajectory t = trajectory_from_json(read_json_file(render_traj));
      const fs::path out = common.out.empty() ? "frames" : common.out;
      const auto holes = render_trajectory(scene, t, out);
      double mean = 0.0;
      for (double h : holes) mean += h / static_cast<double>(holes.size());
      std::cout << json{{"status", "ok"}, {"out", out.string()}, {"frames", holes.size()}, {"mean_hole_fraction", mean}}
                       .dump()
                << "\n";
    } else if (metrics->parsed()) {
      auto expand = [](const std::vector<std::string>& items) {
        std::vector<fs::path> files;
        if (items.size() == 1 && fs::is_directory(items[0])) {
          for (const auto& e : fs::directory_iterator(items[0])) {
            const auto ext = e.path().extension();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
          }
          std::sort(files.begin(), files.end());
        } else {
          files.assign(items.begin(), items.end());
        }
        return files;
      };
      const auto a = expand(renders), b = expand(references);
      if (a.size() != b.size()) throw DomainError("metrics: render and reference counts differ");
      std::vector<Image> ia, ib;
      for (const auto& p : a) ia.push_back(load_rgb(p));
      for (const auto& p : b) ib.push_back(load_rgb(p));
      const MetricsReport report = compute_metrics(ia, ib);
      json frames = json::array();
      for (std::size_t k = 0; k < report.frames.size(); ++k) {
        frames.push_back({{"render", a[k].string()}, {"reference", b[k].string()}, {"psnr", report.frames[k].psnr},
                          {"ssim", report.frames[k].ssim}});
      }
      const json doc{{"status", "ok"}, {"frames", frames}, {"mean_psnr", report.mean_psnr}, {"mean_ssim", report.mean_ssim}};
      if (!common.out.empty()) std::ofstream(common.out) << doc.dump(2) << "\n";
      std::cout << doc.dump() << "\n";
    } else if (exp->parsed()) {
      const fs::path out = common.out.empty() ? "export" : common.out;
      export_scene(export_scene_file, out);
      std::cout << json{{"status", "ok"}, {"out", out.string()}}.dump() << "\n";
    }
    return 0;
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), kExitDomain);
  } catch (const IoError& e) {
    return fail("io", e.what(), kExitIo);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitInternal);
  }
}
