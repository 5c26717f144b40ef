// SPDX-License-Identifier: Apache-2.0
#include "layerpano/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace layerpano {

std::vector<SupervisionView> supervision_views(const Panorama& pano, int view_size, int random_views,
                                               double random_fov, std::uint64_t seed) {
  require(view_size >= 1, "supervision_views: view size must be positive");
  require(random_views >= 0, "supervision_views: random view count must be non-negative");
  constexpr double pi = std::numbers::pi;
  std::vector<PinholeCamera> cams;
  const std::array<std::pair<double, double>, 6> faces = {
      {{0.0, 0.0}, {0.5 * pi, 0.0}, {pi, 0.0}, {-0.5 * pi, 0.0}, {0.0, -0.5 * pi}, {0.0, 0.5 * pi}}};
  for (const auto& [theta, phi] : faces) {
    PinholeCamera cam;
    cam.orientation = orientation_from_angles(theta, phi);
    cam.fov_deg = 90.0;
    cam.width = cam.height = view_size;
    cams.push_back(cam);
  }
  std::mt19937_64 rng(seed);
  for (int k = 0; k < random_views; ++k) {
    const double z = 2.0 * unit_uniform(rng()) - 1.0;
    const double azimuth = 2.0 * pi * unit_uniform(rng()) - pi;
    PinholeCamera cam;
    cam.orientation = orientation_from_angles(azimuth, std::asin(z));
    cam.fov_deg = random_fov;
    cam.width = cam.height = view_size;
    cams.push_back(cam);
  }
  std::vector<SupervisionView> views;
  for (const auto& cam : cams) views.push_back({cam, extract_perspective_view(pano, cam)});
  return views;
}

AdamOptimizer::AdamOptimizer(const LearningRates& lr, double scene_extent, int total_iterations)
    : lr_(lr), extent_(scene_extent), total_(std::max(total_iterations, 1)) {
  require(scene_extent > 0.0, "adam: scene extent must be positive");
}

double AdamOptimizer::position_rate() const {
  const double s = std::clamp(static_cast<double>(t_) / total_, 0.0, 1.0);
  return extent_ * std::exp((1.0 - s) * std::log(lr_.position) + s * std::log(lr_.position_final));
}

void AdamOptimizer::step(GaussianScene& scene, const ParamMatrix& grad) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-15;
  require(grad.cols() == scene.size(), "adam: gradient does not match the scene");
  if (m_.cols() != grad.cols()) {
    require(t_ == 0, "adam: scene size changed without retain()");
    m_ = ParamMatrix::Zero(param::kRows, grad.cols());
    v_ = ParamMatrix::Zero(param::kRows, grad.cols());
  }
  Eigen::Matrix<double, param::kRows, 1> rate;
  rate.segment<3>(param::kMean).setConstant(position_rate());
  rate.segment<3>(param::kLogScale).setConstant(lr_.scale);
  rate.segment<4>(param::kRotation).setConstant(lr_.rotation);
  rate[param::kOpacity] = lr_.opacity;
  rate.segment<3>(param::kColor).setConstant(lr_.color);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, t_);
  const double c2 = 1.0 - std::pow(beta2, t_);
  const Eigen::Array<double, param::kRows, 1> step_size = rate.array() / c1;

  ParamMatrix& p = scene.params();
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    if (scene.frozen(i)) continue;
    m_.col(i) = beta1 * m_.col(i) + (1.0 - beta1) * grad.col(i);
    v_.col(i) = beta2 * v_.col(i) + (1.0 - beta2) * grad.col(i).cwiseAbs2();
    p.col(i).array() -= step_size * m_.col(i).array() / ((v_.col(i).array() / c2).sqrt() + eps);
  }
  scene.project_to_valid();
}

void AdamOptimizer::retain(const std::vector<bool>& keep) {
  if (m_.cols() == 0) return;
  require(keep.size() == static_cast<std::size_t>(m_.cols()), "adam: flag count does not match state");
  Eigen::Index out = 0;
  for (Eigen::Index i = 0; i < m_.cols(); ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    m_.col(out) = m_.col(i);
    v_.col(out) = v_.col(i);
    ++out;
  }
  m_.conservativeResize(Eigen::NoChange, out);
  v_.conservativeResize(Eigen::NoChange, out);
}

double mean_view_loss(const GaussianScene& scene, const std::vector<SupervisionView>& views,
                      const TrainingConfig& config) {
  require(!views.empty(), "mean_view_loss: no views");
  double sum = 0.0;
  for (const auto& view : views) {
    const RenderOutput out = render_pinhole(scene, view.camera, config.render);
    sum += compute_loss(out.color, view.target, nullptr, config.lambda).value;
  }
  return sum / static_cast<double>(views.size());
}

namespace {

void run_stage(GaussianScene& scene, const std::vector<SupervisionView>& views, int iterations,
               const TrainingConfig& config, std::uint64_t seed, StageReport& report) {
  require(!views.empty(), "optimize: no supervision views");
  require(iterations >= 0, "optimize: iteration count must be non-negative");
  const auto start = std::chrono::steady_clock::now();
  report.iterations = iterations;
  report.initial_loss = mean_view_loss(scene, views, config);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(views.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  AdamOptimizer adam(config.lr, config.scene_extent, iterations);
  report.losses.reserve(static_cast<std::size_t>(iterations));

  ParamMatrix grad;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t slot = static_cast<std::size_t>(it) % order.size();
    if (slot == 0) {
      for (std::size_t k = order.size(); k-- > 1;) std::swap(order[k], order[rng() % (k + 1)]);
    }
    const SupervisionView& view = views[order[slot]];
    const SplatRasterizer raster(scene, view.camera, config.render);
    const LossResult loss = compute_loss(raster.output().color, view.target, nullptr, config.lambda);
    report.losses.push_back(loss.value);
    grad.setZero(param::kRows, scene.size());
    raster.backward(loss.gradient, grad);
    adam.step(scene, grad);

    if (config.prune_interval > 0 && (it + 1) % config.prune_interval == 0 && it + 1 < iterations) {
      std::vector<bool> kept;
      const Eigen::Index removed = prune_low_opacity(scene, config.prune_threshold, &kept);
      if (removed > 0) adam.retain(kept);
      report.pruned += removed;
    }
  }
  report.final_loss = mean_view_loss(scene, views, config);
  scene.freeze_all();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

StageReport optimize_base(GaussianScene& scene, const std::vector<SupervisionView>& views, int iterations,
                          const TrainingConfig& config, std::uint64_t seed) {
  StageReport report;
  report.added = scene.active_count();
  run_stage(scene, views, iterations, config, seed, report);
  return report;
}

StageReport optimize_layer(GaussianScene& scene, const std::vector<SupervisionView>& views,
                           const PointCloud& new_points, std::uint32_t layer_id, int iterations,
                           const TrainingConfig& config, std::uint64_t seed) {
  StageReport report;
  if (new_points.empty()) return report;
  if (config.use_selector) {
    const auto selected = gaussian_selector(scene, new_points, config.hash, config.selector_tolerance_deg);
    for (Eigen::Index i : selected) {
      scene.set_frozen(i, false);
      report.activated_uids.push_back(scene.uid(i));
    }
    report.activated = static_cast<Eigen::Index>(selected.size());
  }
  scene.append(init_gaussians(new_points, layer_id));
  report.added = new_points.size();
  run_stage(scene, views, iterations, config, seed, report);
  return report;
}

}  // namespace layerpano
