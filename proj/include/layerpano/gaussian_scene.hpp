// SPDX-License-Identifier: Apache-2.0
//
// Layered scene of 3D Gaussians with view-independent color.
//
// Parameters live column-wise in a 14 x N matrix so optimizers and renderers
// can work on whole blocks: rows 0-2 mean, 3-5 log scale, 6-9 rotation
// quaternion (w, x, y, z, normalized on read), 10 opacity logit, 11-13 color.
#pragma once

#include "layerpano/pointcloud.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace layerpano {

struct Gaussian {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Constant(0.01);
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity = 0.1;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  std::uint32_t layer_id = 0;
  bool frozen = false;
};

namespace param {
inline constexpr int kMean = 0;
inline constexpr int kLogScale = 3;
inline constexpr int kRotation = 6;
inline constexpr int kOpacity = 10;
inline constexpr int kColor = 11;
inline constexpr int kRows = 14;
}  // namespace param

using ParamMatrix = Eigen::Matrix<double, param::kRows, Eigen::Dynamic>;

inline constexpr double kMaxOpacityLogit = 15.0;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

class GaussianScene {
 public:
  GaussianScene() = default;

  Eigen::Index size() const { return params_.cols(); }
  bool empty() const { return params_.cols() == 0; }

  const ParamMatrix& params() const { return params_; }
  /// Mutable parameter access for optimizers. Callers keep the column count.
  ParamMatrix& params() { return params_; }

  std::uint32_t layer_id(Eigen::Index i) const { return layer_ids_[static_cast<std::size_t>(i)]; }
  bool frozen(Eigen::Index i) const { return frozen_[static_cast<std::size_t>(i)] != 0; }
  std::uint64_t uid(Eigen::Index i) const { return uids_[static_cast<std::size_t>(i)]; }
  void set_frozen(Eigen::Index i, bool value) { frozen_[static_cast<std::size_t>(i)] = value ? 1 : 0; }
  void freeze_all() { std::fill(frozen_.begin(), frozen_.end(), std::uint8_t{1}); }
  Eigen::Index active_count() const;

  Gaussian gaussian(Eigen::Index i) const;
  void set_gaussian(Eigen::Index i, const Gaussian& g);
  void append(const std::vector<Gaussian>& gaussians);
  /// Keeps the gaussians flagged true, in their current order.
  void retain(const std::vector<bool>& keep);

  /// Largest layer id + 1 (0 for an empty scene).
  std::uint32_t layer_count() const;
  /// Index range [begin, end) holding the given layer. Layers are stored in insertion order.
  std::pair<Eigen::Index, Eigen::Index> layer_range(std::uint32_t layer) const;

  /// Renormalizes quaternions, clamps opacity logits and colors of active gaussians.
  void project_to_valid();

  Eigen::Vector3d mean(Eigen::Index i) const { return params_.block<3, 1>(param::kMean, i); }
  Eigen::Vector3d scale(Eigen::Index i) const { return params_.block<3, 1>(param::kLogScale, i).array().exp(); }
  Eigen::Quaterniond rotation(Eigen::Index i) const;
  double opacity(Eigen::Index i) const { return sigmoid(params_(param::kOpacity, i)); }
  Eigen::Vector3d color(Eigen::Index i) const { return params_.block<3, 1>(param::kColor, i); }

 private:
  ParamMatrix params_{param::kRows, 0};
  std::vector<std::uint32_t> layer_ids_;
  std::vector<std::uint8_t> frozen_;
  std::vector<std::uint64_t> uids_;
  std::uint64_t next_uid_ = 0;
};

inline constexpr double kInitialOpacity = 0.1;
inline constexpr double kMinInitialScale = 1e-4;

/// One active gaussian per point: isotropic scale from the nearest-neighbour
/// distance clamped to [1e-4, 0.1 depth], identity rotation, opacity 0.1.
std::vector<Gaussian> init_gaussians(const PointCloud& pc, std::uint32_t layer_id);

inline constexpr double kDefaultPruneThreshold = 0.005;

/// Removes active gaussians with opacity below the threshold; returns how many went.
/// `kept` receives one flag per gaussian present before the call.
Eigen::Index prune_low_opacity(GaussianScene& scene, double threshold = kDefaultPruneThreshold,
                               std::vector<bool>* kept = nullptr);

}  // namespace layerpano
