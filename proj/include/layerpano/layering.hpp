// SPDX-License-Identifier: Apache-2.0
//
// Decomposition of a reference panorama into depth layers, ordered far to near.
//
// Layer l (0..N-1) owns the assets of depth cluster l, cluster 0 being the
// farthest. Panorama P_N is the reference; P_l is P_{l+1} with the layer-l
// assets removed and their region completed, so P_0 is the bare background.
// Depth follows the same chain: P_depth^l is restored from P_depth^{l+1}
// inside the layer-l completion mask.
#pragma once

#include "layerpano/image.hpp"
#include "layerpano/image_io.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace layerpano {

struct AssetMask {
  int id = 0;
  Mask mask;
  std::string category;
  bool background = false;
};

struct LayerMask {
  int index = 0;
  Mask mask;
};

inline constexpr int kDefaultLayerCount = 3;
inline constexpr double kAssetDepthPercentile = 0.75;

/// Nearest-rank percentile: the ceil(q n)-th smallest value (1-based).
double nearest_rank_percentile(std::vector<double> values, double q);

/// 75th nearest-rank percentile of depth inside the mask.
double asset_depth_statistic(const Mask& mask, const DepthMap& depth);
inline double asset_depth_statistic(const AssetMask& asset, const DepthMap& depth) {
  return asset_depth_statistic(asset.mask, depth);
}

struct ClusterAssignment {
  std::vector<int> labels;           ///< per input value; 0 is the farthest cluster
  std::vector<double> cluster_means;  ///< decreasing
  int cluster_count = 0;
  double sse = 0.0;
  std::vector<std::string> warnings;
};

/// Exact 1-D K-Means (dynamic programming over sorted values). When fewer values
/// than clusters are given, the cluster count is reduced and a warning recorded.
ClusterAssignment kmeans_cluster_assets(std::span<const double> depths, int cluster_count);

/// Within-cluster sum of squared deviations of an arbitrary labelling.
double within_cluster_sse(std::span<const double> values, std::span<const int> labels);

/// Unions member masks per cluster, far to near. Background assets never join a
/// layer and empty layers are dropped. `labels` is aligned with `assets`.
std::vector<LayerMask> merge_layer_masks(std::span<const AssetMask> assets, std::span<const int> labels);

/// Dilation by a disk of the given pixel radius, wrapping horizontally.
Mask extend_layer_mask(const Mask& mask, int radius);

/// Mask dilation radius used for a panorama of the given width (8 px at 1024).
int default_dilation_radius(int width);

/// Fills masked samples of each plane with the discrete harmonic interpolant of
/// the unmasked ones (4-neighbour Laplacian, horizontal wraparound, no flux
/// through the top and bottom rows). Unmasked samples are untouched.
void harmonic_fill(std::span<Plane<double>* const> planes, const Mask& mask);

/// Unmasked pixels copy the input; masked pixels come from `external` when given,
/// otherwise from a harmonic fill of the surrounding colors.
Image complete_layer(const Image& pano, const Mask& mask, const Image* external = nullptr);

/// Restores depth behind a removed layer: outside the mask the nearer layer's
/// depth is kept, inside it is harmonically filled and clamped to at least
/// `occluder_depth`.
DepthMap align_layer_depth(const Image& layer_rgb, const Mask& mask, const DepthMap& nearer_depth,
                           double occluder_depth);

struct ExternalLayers {
  std::map<int, Image> completions;  ///< keyed by layer index 0..N-1
  std::map<int, DepthMap> depths;
};

struct LayerStack {
  int layer_count = 0;                 ///< N; panoramas hold N + 1 entries
  std::vector<Image> panoramas;        ///< P_0 .. P_N, far to near
  std::vector<DepthMap> depths;        ///< P_depth^0 .. P_depth^N
  std::vector<Mask> masks;             ///< M_0 .. M_{N-1}, union of member assets
  std::vector<Mask> completion_masks;  ///< dilated M_l used for completion and alignment
  std::vector<std::vector<int>> members;  ///< asset ids per layer
  std::vector<double> cluster_depths;     ///< mean member statistic per layer
  std::vector<double> occluder_depths;    ///< clamp used when restoring depth behind layer l
  std::vector<std::string> warnings;

  int width() const { return panoramas.empty() ? 0 : panoramas.front().width(); }
  int height() const { return panoramas.empty() ? 0 : panoramas.front().height(); }
};

struct StackOptions {
  int layer_count = kDefaultLayerCount;
  int dilation_radius = -1;  ///< negative selects default_dilation_radius
};

LayerStack build_layer_stack(const Panorama& reference, std::span<const AssetMask> assets,
                             const StackOptions& options = {}, const ExternalLayers& external = {});

/// Asset masks from a 16-bit label map and its JSON sidecar
/// ({"labels":[{"id":1,"category":"wall","background":true}, ...]}).
std::vector<AssetMask> asset_masks_from_labels(const LabelMap& labels, const std::string& sidecar_json);
std::vector<AssetMask> load_asset_masks(const std::filesystem::path& label_png, const std::filesystem::path& sidecar);

/// Directory layout: layer_{l}_rgb.png, layer_{l}_depth.pfm, layer_{l}_mask.png,
/// layer_{l}_mask_ext.png and stack.json.
void save_layer_stack(const std::filesystem::path& dir, const LayerStack& stack);
LayerStack load_layer_stack(const std::filesystem::path& dir);

}  // namespace layerpano
