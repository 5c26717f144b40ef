// SPDX-License-Identifier: Apache-2.0
//
// Random selector instances with many pairs near the angular tolerance.
#pragma once

#include "layerpano/gaussian_scene.hpp"

#include "oracles.hpp"

#include <numbers>
#include <random>

namespace oracle {

inline Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  const double z = uniform(rng, -1, 1), a = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const double r = std::sqrt(1 - z * z);
  return {r * std::cos(a), z, r * std::sin(a)};
}

/// Direction at exactly `angle` radians from d, in a random plane through d.
inline Eigen::Vector3d tilt(std::mt19937_64& rng, const Eigen::Vector3d& d, double angle) {
  Eigen::Vector3d axis = d.cross(random_direction(rng)).normalized();
  return Eigen::AngleAxisd(angle, axis) * d;
}

struct SelectorCase {
  layerpano::GaussianScene scene;
  layerpano::PointCloud points;
};

/// n frozen gaussians (one in ten left active) and m new points; half of the
/// points sit within twice the tolerance of some gaussian's ray.
inline SelectorCase random_selector_case(std::mt19937_64& rng, int n, int m, double tol_deg) {
  const double tol = tol_deg * std::numbers::pi / 180.0;
  SelectorCase c;
  std::vector<layerpano::Gaussian> gs(static_cast<std::size_t>(n));
  for (auto& g : gs) {
    g.mean = uniform(rng, 0.5, 10.0) * random_direction(rng);
    g.frozen = uniform(rng, 0, 1) < 0.9;
  }
  if (n > 0) gs[0].mean.setZero();
  c.scene.append(gs);
  c.points.resize(m);
  for (int j = 0; j < m; ++j) {
    Eigen::Vector3d dir = random_direction(rng);
    if (n > 0 && j % 2 == 0) {
      const Eigen::Vector3d g = gs[rng() % gs.size()].mean;
      if (g.norm() > 0) dir = tilt(rng, g.normalized(), uniform(rng, 0, 2 * tol));
    }
    c.points.positions.col(j) = uniform(rng, 0.5, 10.0) * dir;
    c.points.colors.col(j).setConstant(0.5);
    c.points.layer_ids[j] = 1;
    c.points.source_pixels.col(j).setConstant(-1);
  }
  return c;
}

}  // namespace oracle
