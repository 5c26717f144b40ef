// SPDX-License-Identifier: Apache-2.0
//
// LPSL scene files: little-endian "LPSL", version u32, count u32, then one
// packed 61-byte record per gaussian: mean f32x3, scale f32x3, rotation f32x4
// (w, x, y, z), opacity f32, color f32x3, layer_id u32, frozen u8.
#pragma once

#include "layerpano/gaussian_scene.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace layerpano {

inline constexpr std::uint32_t kLpslVersion = 1;
inline constexpr std::size_t kLpslHeaderBytes = 12;
inline constexpr std::size_t kLpslRecordBytes = 61;

std::vector<std::uint8_t> encode_lpsl(const GaussianScene& scene);
/// Throws IoError on bad magic, unknown version or a size that disagrees with the count.
GaussianScene decode_lpsl(std::span<const std::uint8_t> bytes);

void save_lpsl(const std::filesystem::path& path, const GaussianScene& scene);
GaussianScene load_lpsl(const std::filesystem::path& path);

/// Raw bytes of one record, for immutability checks.
std::vector<std::uint8_t> encode_record(const GaussianScene& scene, Eigen::Index i);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Manifest describing a scene file: counts per layer, training config and
/// input provenance (file name to SHA-256).
nlohmann::json scene_manifest(const GaussianScene& scene, const std::filesystem::path& scene_file,
                              const nlohmann::json& config, const nlohmann::json& provenance);

}  // namespace layerpano
