// SPDX-License-Identifier: Apache-2.0
//
// Procedural test scenes with exact depth and asset masks. A background shell
// surrounds the origin; assets are angular patches at constant radial depth,
// a checkered cage band, and balls.
#pragma once

#include "layerpano/image.hpp"
#include "layerpano/image_io.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace layerpano {

struct SynthSpec {
  std::uint64_t seed = 0;
  int asset_count = 2;
  int width = 512;
  int height = 256;
  double background_depth = 10.0;
  double patch_depth = 0.0;  ///< radial depth of the first patch; 0 draws it from [2.5, 4]
  double cage_depth = 6.0;
  int supersample = 3;
};

struct SynthAsset {
  int label = 0;
  std::string kind;  ///< "patch", "cage" or "ball"
  double depth = 0.0;  ///< radial depth (patch, cage) or center distance (ball)
  nlohmann::json params;
};

struct SynthScene {
  Image rgb;
  DepthMap depth;
  LabelMap labels;  ///< 0 unlabeled, 1 background wall, 2.. assets
  std::vector<SynthAsset> assets;
  nlohmann::json sidecar;  ///< label sidecar consumed by asset_masks_from_labels
};

inline constexpr int kWallLabel = 1;

SynthScene synth_scene(const SynthSpec& spec);

/// Background color along a unit direction; smooth, in [0.25, 0.85].
Eigen::Vector3d synth_background_color(const Eigen::Vector3d& dir, std::uint64_t seed);

/// Writes pano.png, depth.pfm, labels.png, labels.json, fixture.json and a
/// config.json whose filter settings suit the fixture's point spacing.
void save_synth_scene(const std::filesystem::path& dir, const SynthSpec& spec, const SynthScene& scene);

}  // namespace layerpano
