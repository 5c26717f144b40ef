// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace layerpano {

struct CellKey {
  std::int64_t x = 0, y = 0, z = 0;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Uniform cell index floor(p / cell_size) per component.
CellKey uniform_cell(const Eigen::Vector3d& p, double cell_size);

/// Points bucketed into uniform cubic cells. Buckets keep input order.
class UniformGrid {
 public:
  UniformGrid(const Eigen::Matrix3Xd& points, double cell_size);

  double cell_size() const { return cell_size_; }
  CellKey key_of(const Eigen::Vector3d& p) const { return uniform_cell(p, cell_size_); }

  std::span<const std::uint32_t> cell(const CellKey& key) const;
  std::size_t cell_count(const CellKey& key) const { return cell(key).size(); }

  /// True when some other point lies within `radius` (<= cell size) of point i.
  bool has_neighbor_within(Eigen::Index i, double radius) const;

  /// Distance from point i to its nearest other point, or `max_radius` when none is closer.
  double nearest_distance(Eigen::Index i, double max_radius) const;

 private:
  const Eigen::Matrix3Xd& points_;
  double cell_size_;
  std::vector<std::uint32_t> order_;
  std::unordered_map<CellKey, std::pair<std::uint32_t, std::uint32_t>, CellKeyHash> ranges_;
  CellKey lo_, hi_;  ///< bounds of the occupied cells
};

}  // namespace layerpano
