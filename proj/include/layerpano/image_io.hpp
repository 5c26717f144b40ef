// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/image.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>

namespace layerpano {

/// File could not be read, written or decoded.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using LabelMap = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit PNG or JPEG (chosen by extension) into [0,1] colors. Gray inputs are replicated.
Image load_rgb(const std::filesystem::path& path);
/// 8-bit RGB PNG; values are clamped to [0,1] and rounded.
void save_png(const std::filesystem::path& path, const Image& image);

Mask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const Mask& mask);

/// 16-bit single-channel PNG (also accepts 8-bit gray).
LabelMap load_png16(const std::filesystem::path& path);
void save_png16(const std::filesystem::path& path, const LabelMap& values);

/// Single-channel float PFM ("Pf").
Plane<float> load_pfm(const std::filesystem::path& path);
void save_pfm(const std::filesystem::path& path, const Plane<float>& values);

/// Metric depth from a .pfm file or a 16-bit .png where meters = raw / scale.
DepthMap load_depth(const std::filesystem::path& path, double png_scale = 1000.0);
void save_depth_pfm(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace layerpano
