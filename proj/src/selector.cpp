// SPDX-License-Identifier: Apache-2.0
#include "layerpano/selector.hpp"

#include "layerpano/spatial_grid.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace layerpano {
namespace {

double cos_of_degrees(double deg) {
  require(deg >= 0.0 && deg < 180.0, "gaussian_selector: tolerance must lie in [0, 180) degrees");
  return std::cos(deg * std::numbers::pi / 180.0);
}

}  // namespace

std::vector<Eigen::Index> gaussian_selector(const GaussianScene& scene, const PointCloud& new_points,
                                            const GridHashParams& params, double tolerance_deg) {
  const double cos_tol = cos_of_degrees(tolerance_deg);
  const double tol = tolerance_deg * std::numbers::pi / 180.0;
  const double reach = 2.0 * std::sin(0.5 * tol) * (1.0 + 1e-9) + 1e-7;
  require(params.signed_log, "gaussian_selector: direction hashing needs the signed grid convention");

  std::unordered_map<CellKey, std::vector<Eigen::Index>, CellKeyHash> cells;
  for (Eigen::Index j = 0; j < new_points.size(); ++j) {
    const Eigen::Vector3d p = new_points.positions.col(j);
    const double dp = p.norm();
    if (dp == 0.0) continue;
    const GridIndex key = grid_hash(p / dp, params);
    cells[{key.x(), key.y(), key.z()}].push_back(j);
  }

  std::vector<Eigen::Index> active;
  if (cells.empty()) return active;
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    if (!scene.frozen(i)) continue;
    const Eigen::Vector3d g = scene.mean(i);
    const double dg = g.norm();
    if (dg == 0.0) continue;
    const Eigen::Vector3d dir = g / dg;
    const GridIndex lo = grid_hash((dir.array() - reach).matrix(), params);
    const GridIndex hi = grid_hash((dir.array() + reach).matrix(), params);
    bool hit = false;
    for (std::int64_t x = lo.x(); x <= hi.x() && !hit; ++x) {
      for (std::int64_t y = lo.y(); y <= hi.y() && !hit; ++y) {
        for (std::int64_t z = lo.z(); z <= hi.z() && !hit; ++z) {
          const auto it = cells.find({x, y, z});
          if (it == cells.end()) continue;
          for (Eigen::Index j : it->second) {
            if (blocks_point(g, new_points.positions.col(j), cos_tol)) {
              hit = true;
              break;
            }
          }
        }
      }
    }
    if (hit) active.push_back(i);
  }
  return active;
}

std::vector<Eigen::Index> gaussian_selector_exhaustive(const GaussianScene& scene, const PointCloud& new_points,
                                                       double tolerance_deg) {
  const double cos_tol = cos_of_degrees(tolerance_deg);
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    if (!scene.frozen(i)) continue;
    const Eigen::Vector3d g = scene.mean(i);
    for (Eigen::Index j = 0; j < new_points.size(); ++j) {
      if (blocks_point(g, new_points.positions.col(j), cos_tol)) {
        active.push_back(i);
        break;
      }
    }
  }
  return active;
}

}  // namespace layerpano
