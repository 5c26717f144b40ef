// SPDX-License-Identifier: Apache-2.0
//
// Base and per-layer optimization of the gaussian scene against perspective
// views resampled from the layer panoramas.
#pragma once

#include "layerpano/gaussian_scene.hpp"
#include "layerpano/loss.hpp"
#include "layerpano/render.hpp"
#include "layerpano/selector.hpp"

#include <cstdint>
#include <vector>

namespace layerpano {

inline constexpr int kDefaultBaseIterations = 3000;
inline constexpr int kDefaultLayerIterations = 2000;

/// Adam step sizes. Position rates are multiplied by the scene extent and decay
/// log-linearly from `position` to `position_final` over a stage.
struct LearningRates {
  double position = 1.6e-4;
  double position_final = 1.6e-6;
  double scale = 0.005;
  double rotation = 0.001;
  double opacity = 0.05;
  double color = 0.0025;
};

struct TrainingConfig {
  int base_iterations = kDefaultBaseIterations;
  int layer_iterations = kDefaultLayerIterations;
  double lambda = kDefaultSsimWeight;
  LearningRates lr;
  double scene_extent = 1.0;
  int prune_interval = 500;
  double prune_threshold = kDefaultPruneThreshold;
  int view_size = 0;            ///< supervision view width and height; 0 means panorama width / 4
  int random_views = 8;
  double random_view_fov = 60.0;
  bool use_selector = true;
  double selector_tolerance_deg = kDefaultSelectorToleranceDeg;
  GridHashParams hash;
  RenderSettings render;
};

struct SupervisionView {
  PinholeCamera camera;
  Image target;
};

/// Six 90 degree cube faces plus `random_views` views of `random_fov` degrees
/// with seeded uniformly random directions, all at the panorama center and
/// resampled from the panorama.
std::vector<SupervisionView> supervision_views(const Panorama& pano, int view_size, int random_views,
                                               double random_fov, std::uint64_t seed);

struct StageReport {
  int iterations = 0;
  double initial_loss = 0.0;  ///< mean loss over all supervision views
  double final_loss = 0.0;
  std::vector<double> losses;  ///< per iteration, on the view trained at that step
  Eigen::Index added = 0;
  Eigen::Index activated = 0;
  std::vector<std::uint64_t> activated_uids;  ///< frozen gaussians the selector reopened
  Eigen::Index pruned = 0;
  double seconds = 0.0;
};

/// Adam over the active columns of the parameter matrix. Frozen columns are never written.
class AdamOptimizer {
 public:
  AdamOptimizer(const LearningRates& lr, double scene_extent, int total_iterations);
  void step(GaussianScene& scene, const ParamMatrix& grad);
  void retain(const std::vector<bool>& keep);
  double position_rate() const;

 private:
  LearningRates lr_;
  double extent_;
  int total_;
  int t_ = 0;
  ParamMatrix m_, v_;
};

/// Mean loss of the scene over the views.
double mean_view_loss(const GaussianScene& scene, const std::vector<SupervisionView>& views,
                      const TrainingConfig& config);

/// Optimizes the active gaussians for `iterations` steps, cycling through the
/// views in a seeded shuffled order, then freezes the whole scene.
StageReport optimize_base(GaussianScene& scene, const std::vector<SupervisionView>& views, int iterations,
                          const TrainingConfig& config, std::uint64_t seed);

/// Layer stage: runs the selector for the new points (unless disabled), adds a
/// gaussian per new point with the given layer id, optimizes the active set and
/// freezes everything. An empty cloud leaves the scene untouched.
StageReport optimize_layer(GaussianScene& scene, const std::vector<SupervisionView>& views,
                           const PointCloud& new_points, std::uint32_t layer_id, int iterations,
                           const TrainingConfig& config, std::uint64_t seed);

}  // namespace layerpano
