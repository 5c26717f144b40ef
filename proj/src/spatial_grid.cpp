// SPDX-License-Identifier: Apache-2.0
#include "layerpano/spatial_grid.hpp"

#include "layerpano/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace layerpano {

CellKey uniform_cell(const Eigen::Vector3d& p, double cell_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size))};
}

UniformGrid::UniformGrid(const Eigen::Matrix3Xd& points, double cell_size) : points_(points), cell_size_(cell_size) {
  require(cell_size > 0.0 && std::isfinite(cell_size), "grid: cell size must be positive");
  const auto n = static_cast<std::size_t>(points.cols());
  std::vector<CellKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = key_of(points.col(static_cast<Eigen::Index>(i)));
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  auto less = [&](std::uint32_t a, std::uint32_t b) {
    const CellKey& ka = keys[a];
    const CellKey& kb = keys[b];
    if (ka.x != kb.x) return ka.x < kb.x;
    if (ka.y != kb.y) return ka.y < kb.y;
    if (ka.z != kb.z) return ka.z < kb.z;
    return a < b;
  };
  std::sort(order_.begin(), order_.end(), less);
  ranges_.reserve(n);
  if (n > 0) lo_ = hi_ = keys[0];
  for (const CellKey& k : keys) {
    lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
    hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
  }
  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin + 1;
    while (end < n && keys[order_[end]] == keys[order_[begin]]) ++end;
    ranges_.emplace(keys[order_[begin]], std::make_pair(static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)));
    begin = end;
  }
}

std::span<const std::uint32_t> UniformGrid::cell(const CellKey& key) const {
  const auto it = ranges_.find(key);
  if (it == ranges_.end()) return {};
  return {order_.data() + it->second.first, order_.data() + it->second.second};
}

bool UniformGrid::has_neighbor_within(Eigen::Index i, double radius) const {
  const Eigen::Vector3d p = points_.col(i);
  const CellKey c = key_of(p);
  const double r2 = radius * radius;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        for (std::uint32_t j : cell({c.x + dx, c.y + dy, c.z + dz})) {
          if (static_cast<Eigen::Index>(j) != i && (points_.col(j) - p).squaredNorm() <= r2) return true;
        }
      }
    }
  }
  return false;
}

double UniformGrid::nearest_distance(Eigen::Index i, double max_radius) const {
  const Eigen::Vector3d p = points_.col(i);
  const CellKey c = key_of(p);
  double best2 = max_radius * max_radius;
  bool found = false;
  // Offsets outside the occupied bounds hold no points.
  const CellKey lo{lo_.x - c.x, lo_.y - c.y, lo_.z - c.z};
  const CellKey hi{hi_.x - c.x, hi_.y - c.y, hi_.z - c.z};
  const std::int64_t span = std::max({-lo.x, hi.x, -lo.y, hi.y, -lo.z, hi.z});
  const auto max_ring = std::min(static_cast<std::int64_t>(std::ceil(max_radius / cell_size_)) + 1, span);
  auto visit = [&](std::int64_t dx, std::int64_t dy, std::int64_t dz) {
    for (std::uint32_t j : cell({c.x + dx, c.y + dy, c.z + dz})) {
      if (static_cast<Eigen::Index>(j) == i) continue;
      const double d2 = (points_.col(j) - p).squaredNorm();
      if (d2 < best2 || (!found && d2 <= best2)) {
        best2 = d2;
        found = true;
      }
    }
  };
  for (std::int64_t r = 0; r <= max_ring; ++r) {
    for (std::int64_t dx = std::max(-r, lo.x); dx <= std::min(r, hi.x); ++dx) {
      for (std::int64_t dy = std::max(-r, lo.y); dy <= std::min(r, hi.y); ++dy) {
        if (std::abs(dx) == r || std::abs(dy) == r) {
          for (std::int64_t dz = std::max(-r, lo.z); dz <= std::min(r, hi.z); ++dz) visit(dx, dy, dz);
        } else {
          if (-r >= lo.z) visit(dx, dy, -r);
          if (r > 0 && r <= hi.z) visit(dx, dy, r);
        }
      }
    }
    // Every point beyond ring r is at least r cells away.
    const double reach = static_cast<double>(r) * cell_size_;
    if (reach * reach >= best2) break;
  }
  return std::sqrt(best2);
}

}  // namespace layerpano
