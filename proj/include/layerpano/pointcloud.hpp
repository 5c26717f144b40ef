// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace layerpano {

/// Points lifted from panoramas, with color, layer id and source pixel per point.
struct PointCloud {
  Eigen::Matrix3Xd positions;
  Eigen::Matrix3Xd colors;
  Eigen::Matrix<std::uint32_t, Eigen::Dynamic, 1> layer_ids;
  Eigen::Matrix2Xi source_pixels;

  Eigen::Index size() const { return positions.cols(); }
  bool empty() const { return positions.cols() == 0; }

  void resize(Eigen::Index n);
  /// Points at the given indices, in the order given.
  PointCloud subset(std::span<const Eigen::Index> indices) const;
  /// Appends `other` after this cloud's points.
  void append(const PointCloud& other);
};

struct GridHashParams {
  double beta3 = 10.0;
  /// Extend f(c) = ceil(beta3 ln(c + 1)) to negative components by odd symmetry.
  bool signed_log = true;
};

using GridIndex = Eigen::Matrix<std::int64_t, 3, 1>;

/// Log-spaced grid index, per component sign(c) * ceil(beta3 * ln(|c| + 1)).
GridIndex grid_hash(const Eigen::Vector3d& p, const GridHashParams& params = {});
std::int64_t grid_hash_component(double c, const GridHashParams& params = {});

/// One point per selected pixel at its lifted position; camera center is the origin.
PointCloud lift_panorama(const Image& rgb, const DepthMap& depth, const Mask* mask = nullptr,
                         std::uint32_t layer_id = 0);

inline constexpr double kDefaultBeta1 = 1e-4;
inline constexpr int kDefaultBeta2 = 4;

struct OutlierParams {
  double beta1 = kDefaultBeta1;  ///< maximum nearest-neighbour distance
  int beta2 = kDefaultBeta2;     ///< minimum points per grid cell (the point itself included)
  double radius = 0.02;          ///< grid cell size for neighbour counting
};

struct OutlierReport {
  Eigen::Index input = 0;
  Eigen::Index removed_isolated = 0;
  Eigen::Index removed_sparse = 0;
};

/// Two passes: drop points with no other point within beta1, then drop every
/// point whose grid cell holds fewer than beta2 survivors.
PointCloud remove_stretched_outliers(const PointCloud& pc, const OutlierParams& params,
                                     OutlierReport* report = nullptr);

/// Pass-2 radius for a scene: 0.02 units at unit median depth, scaled by the median depth.
double default_outlier_radius(const PointCloud& pc);

inline constexpr Eigen::Index kDefaultMaxPoints = 2'000'000;

/// Seeded uniform subsampling to exactly `max_points`, split across layers by
/// largest remainder so each layer keeps its share to within one point.
PointCloud downsample(const PointCloud& pc, Eigen::Index max_points, std::uint64_t seed);

/// Binary little-endian PLY with x, y, z (float), red, green, blue (uchar), layer_id (int).
void write_ply(const std::filesystem::path& path, const PointCloud& pc);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace layerpano
