// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: inputs -> layer stack -> point clouds -> layered
// gaussian scene -> artifacts on disk.
#pragma once

#include "layerpano/gaussian_scene.hpp"
#include "layerpano/layering.hpp"
#include "layerpano/optimize.hpp"
#include "layerpano/trajectory.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace layerpano {

/// Build configuration. JSON schema (every key optional):
///   inputs: {pano, depth, labels, labels_json, completions: {"<l>": path}, completion_depths: {"<l>": path}}
///   layers, dilation_radius, beta3, max_points, seed, out
///   outlier: {beta1, beta2, radius}        radius null or absent: 0.02 x median depth
///   selector: {enabled, tolerance_deg}
///   training: {base_iterations, layer_iterations, lambda, prune_interval, prune_threshold,
///              view_size, random_views, random_view_fov,
///              lr: {position, position_final, scale, rotation, opacity, color}}
/// Relative input paths resolve against `base_dir`.
struct PipelineConfig {
  std::filesystem::path pano, depth, labels, labels_json;
  std::map<int, std::filesystem::path> completions, completion_depths;
  int layers = kDefaultLayerCount;
  int dilation_radius = -1;
  double beta1 = kDefaultBeta1;
  int beta2 = kDefaultBeta2;
  std::optional<double> radius;
  double beta3 = 10.0;
  Eigen::Index max_points = kDefaultMaxPoints;
  TrainingConfig training;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  std::filesystem::path base_dir = ".";

  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses a config document; unknown keys raise UsageError.
PipelineConfig parse_pipeline_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct LayerLog {
  int layer = 0;
  Eigen::Index points_lifted = 0;
  Eigen::Index points_kept = 0;
  StageReport stage;
};

struct BuildResult {
  LayerStack stack;
  GaussianScene scene;
  std::vector<LayerLog> layers;
  std::vector<std::string> warnings;
  nlohmann::json log;
};

/// Called after each optimization stage with the layer index, the scene and the stage report.
using StageObserver = std::function<void(int, const GaussianScene&, const StageReport&)>;

/// Runs the whole pipeline and writes: stack/ (layer stack), clouds/layer_<l>.ply,
/// scene.lpsl, scene.json (manifest) and run_log.json into `config.out`.
BuildResult run_build(const PipelineConfig& config, const StageObserver& on_stage = {});

/// Median distance of the gaussian means from the origin.
double median_scene_depth(const GaussianScene& scene);

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& doc);

/// Renders every pose to frame_<k>.png and writes coverage.csv (hole fraction per frame).
std::vector<double> render_trajectory(const GaussianScene& scene, const Trajectory& trajectory,
                                      const std::filesystem::path& out_dir);

/// Copies a scene into a viewer bundle: scene.lpsl, scene.json and means.ply.
void export_scene(const std::filesystem::path& scene_file, const std::filesystem::path& out_dir);

}  // namespace layerpano
