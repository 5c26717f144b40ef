// SPDX-License-Identifier: Apache-2.0
#include "layerpano/layering.hpp"

#include "json.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace layerpano {

double nearest_rank_percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile: no values");
  require(q > 0.0 && q <= 1.0, "percentile: q must lie in (0, 1]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  // 0.75 * n is exact in binary for every n we handle; guard the general case anyway.
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

double asset_depth_statistic(const Mask& mask, const DepthMap& depth) {
  require(mask.rows() == depth.rows() && mask.cols() == depth.cols(), "asset_depth_statistic: size mismatch");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(mask.count()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (mask.data()[i]) values.push_back(depth.data()[i]);
  }
  require(!values.empty(), "asset_depth_statistic: empty mask");
  return nearest_rank_percentile(std::move(values), kAssetDepthPercentile);
}

double within_cluster_sse(std::span<const double> values, std::span<const int> labels) {
  require(values.size() == labels.size(), "within_cluster_sse: size mismatch");
  std::map<int, std::pair<double, int>> sums;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& s = sums[labels[i]];
    s.first += values[i];
    s.second += 1;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& s = sums[labels[i]];
    const double d = values[i] - s.first / s.second;
    sse += d * d;
  }
  return sse;
}

ClusterAssignment kmeans_cluster_assets(std::span<const double> depths, int cluster_count) {
  require(cluster_count >= 1, "kmeans_cluster_assets: cluster count must be at least 1");
  ClusterAssignment out;
  const int n = static_cast<int>(depths.size());
  if (n == 0) return out;
  int k = cluster_count;
  if (n < k) {
    out.warnings.push_back("only " + std::to_string(n) + " assets for " + std::to_string(k) +
                           " layers; reducing the layer count to " + std::to_string(n));
    k = n;
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depths[a] < depths[b]; });
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[i] = depths[order[i]];

  // cost(i, j): SSE of sorted x[i..j], two-pass for accuracy.
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double mean = 0.0;
      for (int t = i; t <= j; ++t) mean += x[t];
      mean /= (j - i + 1);
      double s = 0.0;
      for (int t = i; t <= j; ++t) s += (x[t] - mean) * (x[t] - mean);
      cost(i, j) = s;
    }
  }

  // best(c, j): minimal SSE of x[0..j] split into c + 1 contiguous groups.
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(k, n, inf);
  Eigen::MatrixXi split = Eigen::MatrixXi::Zero(k, n);
  for (int j = 0; j < n; ++j) best(0, j) = cost(0, j);
  for (int c = 1; c < k; ++c) {
    for (int j = c; j < n; ++j) {
      for (int i = c; i <= j; ++i) {
        const double v = best(c - 1, i - 1) + cost(i, j);
        if (v < best(c, j)) {
          best(c, j) = v;
          split(c, j) = i;
        }
      }
    }
  }

  // Groups come out nearest first; relabel so cluster 0 is the farthest.
  std::vector<int> sorted_label(static_cast<std::size_t>(n));
  out.cluster_means.assign(static_cast<std::size_t>(k), 0.0);
  int end = n - 1;
  for (int c = k - 1; c >= 0; --c) {
    const int begin = c == 0 ? 0 : split(c, end);
    const int label = k - 1 - c;
    double sum = 0.0;
    for (int t = begin; t <= end; ++t) {
      sorted_label[t] = label;
      sum += x[t];
    }
    out.cluster_means[label] = sum / (end - begin + 1);
    end = begin - 1;
  }
  out.labels.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) out.labels[order[i]] = sorted_label[i];
  out.cluster_count = k;
  out.sse = best(k - 1, n - 1);
  return out;
}

std::vector<LayerMask> merge_layer_masks(std::span<const AssetMask> assets, std::span<const int> labels) {
  require(assets.size() == labels.size(), "merge_layer_masks: one label per asset required");
  int max_label = -1;
  for (std::size_t i = 0; i < assets.size(); ++i) {
    if (!assets[i].background) max_label = std::max(max_label, labels[i]);
  }
  std::vector<LayerMask> layers;
  for (int l = 0; l <= max_label; ++l) {
    Mask merged;
    for (std::size_t i = 0; i < assets.size(); ++i) {
      if (assets[i].background || labels[i] != l) continue;
      if (merged.size() == 0) {
        merged = assets[i].mask;
      } else {
        require(merged.rows() == assets[i].mask.rows() && merged.cols() == assets[i].mask.cols(),
                "merge_layer_masks: mask sizes differ");
        merged = merged || assets[i].mask;
      }
    }
    if (merged.size() == 0 || !merged.any()) continue;
    layers.push_back({static_cast<int>(layers.size()), std::move(merged)});
  }
  return layers;
}

Mask extend_layer_mask(const Mask& mask, int radius) {
  require(radius >= 0, "extend_layer_mask: radius must be non-negative");
  if (radius == 0) return mask;
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  Mask out = Mask::Constant(h, w, false);
  // Prefix counts per row make every horizontal span query O(1).
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prefix(h, w + 1);
  for (int y = 0; y < h; ++y) {
    prefix(y, 0) = 0;
    for (int x = 0; x < w; ++x) prefix(y, x + 1) = prefix(y, x) + (mask(y, x) ? 1 : 0);
  }
  auto span_hits = [&](int row, int x0, int x1) {  // inclusive, may wrap
    if (x1 - x0 + 1 >= w) return prefix(row, w) > 0;
    const int a = ((x0 % w) + w) % w;
    const int b = ((x1 % w) + w) % w;
    if (a <= b) return prefix(row, b + 1) - prefix(row, a) > 0;
    return prefix(row, w) - prefix(row, a) + prefix(row, b + 1) > 0;
  };
  const long r2 = static_cast<long>(radius) * radius;
  for (int y = 0; y < h; ++y) {
    for (int dy = -radius; dy <= radius; ++dy) {
      const int row = y + dy;
      if (row < 0 || row >= h || prefix(row, w) == 0) continue;
      const int half = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2 - static_cast<long>(dy) * dy))));
      for (int x = 0; x < w; ++x) {
        if (!out(y, x) && span_hits(row, x - half, x + half)) out(y, x) = true;
      }
    }
  }
  return out;
}

int default_dilation_radius(int width) { return static_cast<int>(std::lround(8.0 * width / 1024.0)); }

void harmonic_fill(std::span<Plane<double>* const> planes, const Mask& mask) {
  if (planes.empty() || !mask.any()) return;
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  for (auto* p : planes) require(p->rows() == h && p->cols() == w, "harmonic_fill: size mismatch");
  require(!mask.all(), "harmonic_fill: mask covers the whole panorama, nothing to fill from");

  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> index =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(h, w, -1);
  int unknowns = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(y, x)) index(y, x) = unknowns++;
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 5);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(unknowns, static_cast<Eigen::Index>(planes.size()));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int row = index(y, x);
      if (row < 0) continue;
      const int nx[4] = {(x + 1) % w, (x + w - 1) % w, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      double diagonal = 0.0;
      for (int t = 0; t < 4; ++t) {
        if (ny[t] < 0 || ny[t] >= h) continue;
        if (nx[t] == x && ny[t] == y) continue;  // w == 1 wraps onto itself
        diagonal += 1.0;
        const int col = index(ny[t], nx[t]);
        if (col >= 0) {
          triplets.emplace_back(row, col, -1.0);
        } else {
          for (std::size_t k = 0; k < planes.size(); ++k) rhs(row, static_cast<Eigen::Index>(k)) += (*planes[k])(ny[t], nx[t]);
        }
      }
      triplets.emplace_back(row, row, diagonal);
    }
  }
  Eigen::SparseMatrix<double> laplacian(unknowns, unknowns);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
  require(solver.info() == Eigen::Success, "harmonic_fill: factorization failed");
  const Eigen::MatrixXd solution = solver.solve(rhs);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int row = index(y, x);
      if (row < 0) continue;
      for (std::size_t k = 0; k < planes.size(); ++k) (*planes[k])(y, x) = solution(row, static_cast<Eigen::Index>(k));
    }
  }
}

Image complete_layer(const Image& pano, const Mask& mask, const Image* external) {
  require(same_size(mask, pano.width(), pano.height()), "complete_layer: mask size does not match panorama");
  Image out = pano;
  if (!mask.any()) return out;
  if (external) {
    require(external->width() == pano.width() && external->height() == pano.height(),
            "complete_layer: external completion size does not match panorama");
    for (int k = 0; k < 3; ++k) out.channel[k] = mask.select(external->channel[k], pano.channel[k]);
    return out;
  }
  std::array<Plane<double>*, 3> planes = {&out.channel[0], &out.channel[1], &out.channel[2]};
  harmonic_fill(planes, mask);
  for (auto& c : out.channel) c = mask.select(c.cwiseMax(0.0).cwiseMin(1.0), c);
  return out;
}

DepthMap align_layer_depth(const Image& layer_rgb, const Mask& mask, const DepthMap& nearer_depth,
                           double occluder_depth) {
  require(same_size(mask, layer_rgb.width(), layer_rgb.height()), "align_layer_depth: mask size mismatch");
  require(nearer_depth.rows() == mask.rows() && nearer_depth.cols() == mask.cols(),
          "align_layer_depth: depth size mismatch");
  DepthMap out = nearer_depth;
  if (!mask.any()) return out;
  require(!mask.all(), "align_layer_depth: mask covers the whole panorama");
  std::array<Plane<double>*, 1> planes = {&out};
  harmonic_fill(planes, mask);
  out = mask.select(out.cwiseMax(occluder_depth), nearer_depth);
  return out;
}

LayerStack build_layer_stack(const Panorama& reference, std::span<const AssetMask> assets, const StackOptions& options,
                             const ExternalLayers& external) {
  require(reference.has_depth(), "build_layer_stack: reference depth is required");
  require(options.layer_count >= 0, "build_layer_stack: layer count must be non-negative");
  const int w = reference.width();
  const int h = reference.height();
  for (const auto& a : assets) {
    require(same_size(a.mask, w, h), "build_layer_stack: asset mask " + std::to_string(a.id) + " has wrong size");
    require(a.mask.any(), "build_layer_stack: asset mask " + std::to_string(a.id) + " is empty");
  }

  LayerStack stack;
  std::vector<AssetMask> foreground;
  std::vector<double> stats;
  for (const auto& a : assets) {
    if (a.background || options.layer_count == 0) continue;
    foreground.push_back(a);
    stats.push_back(asset_depth_statistic(a, reference.depth()));
  }
  ClusterAssignment clusters = foreground.empty() ? ClusterAssignment{} : kmeans_cluster_assets(stats, options.layer_count);
  stack.warnings = clusters.warnings;
  const std::vector<LayerMask> layers = merge_layer_masks(foreground, clusters.labels);
  const int n = static_cast<int>(layers.size());
  stack.layer_count = n;
  stack.masks.resize(n);
  stack.completion_masks.resize(n);
  stack.members.resize(n);
  stack.cluster_depths.resize(n);
  stack.occluder_depths.resize(n);
  stack.panoramas.resize(static_cast<std::size_t>(n) + 1);
  stack.depths.resize(static_cast<std::size_t>(n) + 1);
  stack.panoramas[n] = reference.rgb();
  stack.depths[n] = reference.depth();

  for (int l = 0; l < n; ++l) {
    stack.masks[l] = layers[l].mask;
    stack.cluster_depths[l] = clusters.cluster_means[l];
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < foreground.size(); ++i) {
      if (clusters.labels[i] != l) continue;
      stack.members[l].push_back(foreground[i].id);
      nearest = std::min(nearest, stats[i]);
    }
    stack.occluder_depths[l] = nearest;
  }

  const int radius = options.dilation_radius >= 0 ? options.dilation_radius : default_dilation_radius(w);
  for (int l = n - 1; l >= 0; --l) {
    stack.completion_masks[l] = extend_layer_mask(stack.masks[l], radius);
    const Mask& m = stack.completion_masks[l];
    const auto ext_rgb = external.completions.find(l);
    stack.panoramas[l] = complete_layer(stack.panoramas[l + 1], m,
                                        ext_rgb == external.completions.end() ? nullptr : &ext_rgb->second);
    const auto ext_depth = external.depths.find(l);
    if (ext_depth != external.depths.end()) {
      require(ext_depth->second.rows() == h && ext_depth->second.cols() == w,
              "build_layer_stack: external depth size mismatch for layer " + std::to_string(l));
      stack.depths[l] = m.select(ext_depth->second, stack.depths[l + 1]);
    } else {
      stack.depths[l] = align_layer_depth(stack.panoramas[l], m, stack.depths[l + 1], stack.occluder_depths[l]);
    }
  }
  return stack;
}

std::vector<AssetMask> asset_masks_from_labels(const LabelMap& labels, const std::string& sidecar_json) {
  const auto doc = nlohmann::json::parse(sidecar_json);
  require(doc.contains("labels") && doc["labels"].is_array(), "asset sidecar: missing \"labels\" array");
  std::vector<AssetMask> assets;
  for (const auto& entry : doc["labels"]) {
    AssetMask a;
    a.id = entry.at("id").get<int>();
    require(a.id > 0 && a.id <= 0xffff, "asset sidecar: label ids must lie in [1, 65535]");
    a.category = entry.value("category", std::string{});
    a.background = entry.value("background", false);
    a.mask = labels == static_cast<std::uint16_t>(a.id);
    if (!a.mask.any()) continue;  // label declared but not visible
    assets.push_back(std::move(a));
  }
  return assets;
}

std::vector<AssetMask> load_asset_masks(const std::filesystem::path& label_png, const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open " + sidecar.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return asset_masks_from_labels(load_png16(label_png), text);
}

namespace {
std::string layer_file(int l, const char* suffix) { return "layer_" + std::to_string(l) + suffix; }
}  // namespace

void save_layer_stack(const std::filesystem::path& dir, const LayerStack& stack) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["N"] = stack.layer_count;
  manifest["ordering"] = "far_to_near";
  manifest["depth_format"] = "pfm";
  manifest["depth_scale"] = 1.0;
  manifest["width"] = stack.width();
  manifest["height"] = stack.height();
  manifest["layers"] = nlohmann::json::array();
  for (int l = 0; l <= stack.layer_count; ++l) {
    save_png(dir / layer_file(l, "_rgb.png"), stack.panoramas[l]);
    save_depth_pfm(dir / layer_file(l, "_depth.pfm"), stack.depths[l]);
    nlohmann::json entry{{"index", l}};
    if (l < stack.layer_count) {
      save_mask_png(dir / layer_file(l, "_mask.png"), stack.masks[l]);
      save_mask_png(dir / layer_file(l, "_mask_ext.png"), stack.completion_masks[l]);
      entry["members"] = stack.members[l];
      entry["cluster_depth"] = stack.cluster_depths[l];
      entry["occluder_depth"] = stack.occluder_depths[l];
    } else {
      entry["reference"] = true;
    }
    manifest["layers"].push_back(entry);
  }
  manifest["warnings"] = stack.warnings;
  std::ofstream(dir / "stack.json") << manifest.dump(2) << "\n";
}

LayerStack load_layer_stack(const std::filesystem::path& dir) {
  std::ifstream in(dir / "stack.json");
  if (!in) throw IoError("cannot open " + (dir / "stack.json").string());
  const auto manifest = nlohmann::json::parse(in);
  LayerStack stack;
  stack.layer_count = manifest.at("N").get<int>();
  const int n = stack.layer_count;
  for (int l = 0; l <= n; ++l) {
    stack.panoramas.push_back(load_rgb(dir / layer_file(l, "_rgb.png")));
    stack.depths.push_back(load_depth(dir / layer_file(l, "_depth.pfm")));
  }
  for (int l = 0; l < n; ++l) {
    stack.masks.push_back(load_mask_png(dir / layer_file(l, "_mask.png")));
    stack.completion_masks.push_back(load_mask_png(dir / layer_file(l, "_mask_ext.png")));
    const auto& entry = manifest.at("layers").at(static_cast<std::size_t>(l));
    stack.members.push_back(entry.value("members", std::vector<int>{}));
    stack.cluster_depths.push_back(entry.value("cluster_depth", 0.0));
    stack.occluder_depths.push_back(entry.value("occluder_depth", 0.0));
  }
  stack.warnings = manifest.value("warnings", std::vector<std::string>{});
  return stack;
}

}  // namespace layerpano
