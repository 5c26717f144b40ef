// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/gaussian_scene.hpp"
#include "layerpano/pointcloud.hpp"

#include <vector>

namespace layerpano {

inline constexpr double kDefaultSelectorToleranceDeg = 0.5;

/// Ray test between a frozen gaussian mean g and a new point p, both relative to
/// the camera origin: their directions agree within the tolerance (given as its
/// cosine) and g is strictly nearer than p.
inline bool blocks_point(const Eigen::Vector3d& g, const Eigen::Vector3d& p, double cos_tolerance) {
  const double dg = g.norm();
  const double dp = p.norm();
  if (dg == 0.0 || dp == 0.0) return false;
  return (g / dg).dot(p / dp) >= cos_tolerance && dg < dp;
}

/// Frozen gaussians lying in front of some new point on the same ray from the
/// origin. Candidates are found through the log grid of unit directions.
/// Returns sorted gaussian indices.
std::vector<Eigen::Index> gaussian_selector(const GaussianScene& scene, const PointCloud& new_points,
                                            const GridHashParams& params = {},
                                            double tolerance_deg = kDefaultSelectorToleranceDeg);

/// The same test by exhaustive comparison of every pair.
std::vector<Eigen::Index> gaussian_selector_exhaustive(const GaussianScene& scene, const PointCloud& new_points,
                                                       double tolerance_deg = kDefaultSelectorToleranceDeg);

}  // namespace layerpano
