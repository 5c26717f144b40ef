// SPDX-License-Identifier: Apache-2.0
#include "layerpano/gaussian_scene.hpp"

#include "layerpano/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

namespace layerpano {

Eigen::Index GaussianScene::active_count() const {
  return static_cast<Eigen::Index>(std::count(frozen_.begin(), frozen_.end(), std::uint8_t{0}));
}

Eigen::Quaterniond GaussianScene::rotation(Eigen::Index i) const {
  const auto q = params_.block<4, 1>(param::kRotation, i);
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
}

Gaussian GaussianScene::gaussian(Eigen::Index i) const {
  Gaussian g;
  g.mean = mean(i);
  g.scale = scale(i);
  g.rotation = rotation(i);
  g.opacity = opacity(i);
  g.color = color(i);
  g.layer_id = layer_id(i);
  g.frozen = frozen(i);
  return g;
}

void GaussianScene::set_gaussian(Eigen::Index i, const Gaussian& g) {
  require(g.scale.minCoeff() > 0.0, "gaussian: scale must be positive");
  require(g.opacity > 0.0 && g.opacity < 1.0, "gaussian: opacity must lie in (0, 1)");
  require(std::abs(g.rotation.norm() - 1.0) <= 1e-6, "gaussian: rotation must be a unit quaternion");
  require(g.mean.allFinite() && g.color.allFinite(), "gaussian: non-finite mean or color");
  params_.block<3, 1>(param::kMean, i) = g.mean;
  params_.block<3, 1>(param::kLogScale, i) = g.scale.array().log().matrix();
  params_.block<4, 1>(param::kRotation, i) << g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z();
  params_(param::kOpacity, i) = logit(g.opacity);
  params_.block<3, 1>(param::kColor, i) = g.color;
  layer_ids_[static_cast<std::size_t>(i)] = g.layer_id;
  frozen_[static_cast<std::size_t>(i)] = g.frozen ? 1 : 0;
}

void GaussianScene::append(const std::vector<Gaussian>& gaussians) {
  const Eigen::Index n = size();
  const auto m = static_cast<Eigen::Index>(gaussians.size());
  params_.conservativeResize(Eigen::NoChange, n + m);
  layer_ids_.resize(static_cast<std::size_t>(n + m));
  frozen_.resize(static_cast<std::size_t>(n + m));
  uids_.resize(static_cast<std::size_t>(n + m));
  for (Eigen::Index k = 0; k < m; ++k) {
    set_gaussian(n + k, gaussians[static_cast<std::size_t>(k)]);
    uids_[static_cast<std::size_t>(n + k)] = next_uid_++;
  }
}

void GaussianScene::retain(const std::vector<bool>& keep) {
  require(keep.size() == static_cast<std::size_t>(size()), "retain: flag count does not match scene size");
  Eigen::Index out = 0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    if (out != i) {
      params_.col(out) = params_.col(i);
      layer_ids_[static_cast<std::size_t>(out)] = layer_ids_[static_cast<std::size_t>(i)];
      frozen_[static_cast<std::size_t>(out)] = frozen_[static_cast<std::size_t>(i)];
      uids_[static_cast<std::size_t>(out)] = uids_[static_cast<std::size_t>(i)];
    }
    ++out;
  }
  params_.conservativeResize(Eigen::NoChange, out);
  layer_ids_.resize(static_cast<std::size_t>(out));
  frozen_.resize(static_cast<std::size_t>(out));
  uids_.resize(static_cast<std::size_t>(out));
}

std::uint32_t GaussianScene::layer_count() const {
  if (layer_ids_.empty()) return 0;
  return *std::max_element(layer_ids_.begin(), layer_ids_.end()) + 1;
}

std::pair<Eigen::Index, Eigen::Index> GaussianScene::layer_range(std::uint32_t layer) const {
  const auto first = std::find(layer_ids_.begin(), layer_ids_.end(), layer);
  if (first == layer_ids_.end()) return {size(), size()};
  const auto last = std::find_if(first, layer_ids_.end(), [layer](std::uint32_t id) { return id != layer; });
  return {first - layer_ids_.begin(), last - layer_ids_.begin()};
}

void GaussianScene::project_to_valid() {
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (frozen(i)) continue;
    auto q = params_.block<4, 1>(param::kRotation, i);
    const double n = q.norm();
    if (n > 0.0) {
      // Renormalizing a unit quaternion can flip low bits, so leave those untouched.
      if (std::abs(n - 1.0) > 1e-12) q /= n;
    } else {
      q << 1.0, 0.0, 0.0, 0.0;
    }
    params_(param::kOpacity, i) = std::clamp(params_(param::kOpacity, i), -kMaxOpacityLogit, kMaxOpacityLogit);
    params_.block<3, 1>(param::kColor, i) = params_.block<3, 1>(param::kColor, i).cwiseMax(0.0).cwiseMin(1.0);
  }
}

std::vector<Gaussian> init_gaussians(const PointCloud& pc, std::uint32_t layer_id) {
  require(!pc.empty(), "init_gaussians: empty point cloud");
  double max_depth = 0.0;
  for (Eigen::Index i = 0; i < pc.size(); ++i) max_depth = std::max(max_depth, pc.positions.col(i).norm());
  const double upper_bound = std::max(0.1 * max_depth, kMinInitialScale);

  // Cell size near the typical spacing keeps nearest-neighbour shells small.
  const double extent = (pc.positions.rowwise().maxCoeff() - pc.positions.rowwise().minCoeff()).maxCoeff();
  const double cell = std::max(extent / std::cbrt(static_cast<double>(pc.size())), 1e-6);
  const UniformGrid grid(pc.positions, cell);

  std::vector<Gaussian> out(static_cast<std::size_t>(pc.size()));
  for (Eigen::Index i = 0; i < pc.size(); ++i) {
    const double depth = pc.positions.col(i).norm();
    const double hi = std::max(0.1 * depth, kMinInitialScale);
    const double nn = grid.nearest_distance(i, upper_bound);
    Gaussian& g = out[static_cast<std::size_t>(i)];
    g.mean = pc.positions.col(i);
    g.scale.setConstant(std::clamp(nn, kMinInitialScale, hi));
    g.rotation = Eigen::Quaterniond::Identity();
    g.opacity = kInitialOpacity;
    g.color = pc.colors.col(i).cwiseMax(0.0).cwiseMin(1.0);
    g.layer_id = layer_id;
    g.frozen = false;
  }
  return out;
}

Eigen::Index prune_low_opacity(GaussianScene& scene, double threshold, std::vector<bool>* kept) {
  require(threshold > 0.0 && threshold < 1.0, "prune_low_opacity: threshold must lie in (0, 1)");
  std::vector<bool> keep(static_cast<std::size_t>(scene.size()), true);
  Eigen::Index removed = 0;
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    if (!scene.frozen(i) && scene.opacity(i) < threshold) {
      keep[static_cast<std::size_t>(i)] = false;
      ++removed;
    }
  }
  if (removed > 0) scene.retain(keep);
  if (kept) *kept = std::move(keep);
  return removed;
}

}  // namespace layerpano
