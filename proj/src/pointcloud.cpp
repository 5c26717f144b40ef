// SPDX-License-Identifier: Apache-2.0
#include "layerpano/pointcloud.hpp"

#include "layerpano/erp.hpp"
#include "layerpano/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace layerpano {

void PointCloud::resize(Eigen::Index n) {
  positions.resize(3, n);
  colors.resize(3, n);
  layer_ids.resize(n);
  source_pixels.resize(2, n);
}

PointCloud PointCloud::subset(std::span<const Eigen::Index> indices) const {
  PointCloud out;
  out.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    const auto j = static_cast<Eigen::Index>(k);
    out.positions.col(j) = positions.col(i);
    out.colors.col(j) = colors.col(i);
    out.layer_ids[j] = layer_ids[i];
    out.source_pixels.col(j) = source_pixels.col(i);
  }
  return out;
}

void PointCloud::append(const PointCloud& other) {
  const Eigen::Index n = size();
  PointCloud merged;
  merged.resize(n + other.size());
  merged.positions << positions, other.positions;
  merged.colors << colors, other.colors;
  merged.layer_ids << layer_ids, other.layer_ids;
  merged.source_pixels << source_pixels, other.source_pixels;
  *this = std::move(merged);
}

std::int64_t grid_hash_component(double c, const GridHashParams& params) {
  require(params.beta3 > 0.0, "grid_hash: beta3 must be positive");
  require(std::isfinite(c), "grid_hash: non-finite component");
  if (!params.signed_log) {
    require(c > -1.0, "grid_hash: unsigned convention needs components above -1");
    return static_cast<std::int64_t>(std::ceil(params.beta3 * std::log1p(c)));
  }
  const auto magnitude = static_cast<std::int64_t>(std::ceil(params.beta3 * std::log1p(std::abs(c))));
  return c < 0.0 ? -magnitude : magnitude;
}

GridIndex grid_hash(const Eigen::Vector3d& p, const GridHashParams& params) {
  return {grid_hash_component(p.x(), params), grid_hash_component(p.y(), params),
          grid_hash_component(p.z(), params)};
}

PointCloud lift_panorama(const Image& rgb, const DepthMap& depth, const Mask* mask, std::uint32_t layer_id) {
  const int w = rgb.width();
  const int h = rgb.height();
  require(depth.rows() == h && depth.cols() == w, "lift_panorama: depth size does not match image");
  if (mask) require(same_size(*mask, w, h), "lift_panorama: mask size does not match image");
  const Eigen::Index n = mask ? mask->count() : static_cast<Eigen::Index>(w) * h;
  PointCloud pc;
  pc.resize(n);
  Eigen::Index k = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (mask && !(*mask)(v, u)) continue;
      const double d = depth(v, u);
      require(std::isfinite(d) && d > 0.0,
              "lift_panorama: missing depth at pixel (" + std::to_string(u) + ", " + std::to_string(v) + ")");
      SphericalCoord s = pixel_to_angles<double>(u, v, w, h);
      s.depth = d;
      pc.positions.col(k) = spherical_to_cartesian(s);
      pc.colors.col(k) = rgb.pixel(u, v);
      pc.layer_ids[k] = layer_id;
      pc.source_pixels.col(k) = Eigen::Vector2i(u, v);
      ++k;
    }
  }
  return pc;
}

PointCloud remove_stretched_outliers(const PointCloud& pc, const OutlierParams& params, OutlierReport* report) {
  require(params.beta1 > 0.0, "remove_stretched_outliers: beta1 must be positive");
  require(params.beta2 >= 0, "remove_stretched_outliers: beta2 must be non-negative");
  require(params.radius > 0.0, "remove_stretched_outliers: radius must be positive");
  OutlierReport r;
  r.input = pc.size();
  if (pc.empty()) {
    if (report) *report = r;
    return pc;
  }

  std::vector<Eigen::Index> kept;
  kept.reserve(static_cast<std::size_t>(pc.size()));
  {
    const UniformGrid grid(pc.positions, params.beta1);
    for (Eigen::Index i = 0; i < pc.size(); ++i) {
      if (grid.has_neighbor_within(i, params.beta1)) kept.push_back(i);
    }
  }
  r.removed_isolated = pc.size() - static_cast<Eigen::Index>(kept.size());
  PointCloud stage = pc.subset(kept);

  kept.clear();
  {
    const UniformGrid grid(stage.positions, params.radius);
    for (Eigen::Index i = 0; i < stage.size(); ++i) {
      if (grid.cell_count(grid.key_of(stage.positions.col(i))) >= static_cast<std::size_t>(params.beta2)) {
        kept.push_back(i);
      }
    }
  }
  r.removed_sparse = stage.size() - static_cast<Eigen::Index>(kept.size());
  if (report) *report = r;
  return stage.subset(kept);
}

double default_outlier_radius(const PointCloud& pc) {
  if (pc.empty()) return 0.02;
  std::vector<double> norms(static_cast<std::size_t>(pc.size()));
  for (Eigen::Index i = 0; i < pc.size(); ++i) norms[static_cast<std::size_t>(i)] = pc.positions.col(i).norm();
  auto mid = norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2);
  std::nth_element(norms.begin(), mid, norms.end());
  return 0.02 * std::max(*mid, 1e-9);
}

PointCloud downsample(const PointCloud& pc, Eigen::Index max_points, std::uint64_t seed) {
  require(max_points >= 1, "downsample: max_points must be at least 1");
  const Eigen::Index n = pc.size();
  if (n <= max_points) return pc;

  std::map<std::uint32_t, std::vector<Eigen::Index>> by_layer;
  for (Eigen::Index i = 0; i < n; ++i) by_layer[pc.layer_ids[i]].push_back(i);

  // Largest-remainder quotas, ties broken by layer id.
  struct Share {
    std::uint32_t layer;
    Eigen::Index quota;
    double remainder;
  };
  std::vector<Share> shares;
  Eigen::Index assigned = 0;
  for (const auto& [layer, idx] : by_layer) {
    const double exact = static_cast<double>(max_points) * static_cast<double>(idx.size()) / static_cast<double>(n);
    const auto quota = static_cast<Eigen::Index>(std::floor(exact));
    shares.push_back({layer, quota, exact - static_cast<double>(quota)});
    assigned += quota;
  }
  std::vector<std::size_t> by_remainder(shares.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return shares[a].remainder > shares[b].remainder; });
  for (std::size_t k = 0; assigned < max_points; ++k, ++assigned) shares[by_remainder[k % shares.size()]].quota += 1;

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(max_points));
  for (const auto& share : shares) {
    std::vector<Eigen::Index> idx = by_layer[share.layer];
    const auto take = static_cast<std::size_t>(share.quota);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  return pc.subset(chosen);
}

}  // namespace layerpano
