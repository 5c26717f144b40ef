// SPDX-License-Identifier: Apache-2.0
#include "layerpano/scene_io.hpp"

#include "layerpano/image_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace layerpano {
namespace {

static_assert(std::endian::native == std::endian::little, "LPSL encoding assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto offset = out.size();
  out.resize(offset + sizeof(T));
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

template <typename T>
T take(const std::uint8_t*& src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  src += sizeof(T);
  return value;
}

void put_record(std::vector<std::uint8_t>& out, const GaussianScene& scene, Eigen::Index i) {
  const auto& p = scene.params();
  for (int k = 0; k < 3; ++k) put(out, static_cast<float>(p(param::kMean + k, i)));
  for (int k = 0; k < 3; ++k) put(out, static_cast<float>(std::exp(p(param::kLogScale + k, i))));
  for (int k = 0; k < 4; ++k) put(out, static_cast<float>(p(param::kRotation + k, i)));
  put(out, static_cast<float>(scene.opacity(i)));
  for (int k = 0; k < 3; ++k) put(out, static_cast<float>(p(param::kColor + k, i)));
  put(out, scene.layer_id(i));
  put(out, static_cast<std::uint8_t>(scene.frozen(i) ? 1 : 0));
}

}  // namespace

std::vector<std::uint8_t> encode_record(const GaussianScene& scene, Eigen::Index i) {
  std::vector<std::uint8_t> out;
  out.reserve(kLpslRecordBytes);
  put_record(out, scene, i);
  return out;
}

std::vector<std::uint8_t> encode_lpsl(const GaussianScene& scene) {
  std::vector<std::uint8_t> out;
  out.reserve(kLpslHeaderBytes + kLpslRecordBytes * static_cast<std::size_t>(scene.size()));
  for (char c : {'L', 'P', 'S', 'L'}) out.push_back(static_cast<std::uint8_t>(c));
  put(out, kLpslVersion);
  put(out, static_cast<std::uint32_t>(scene.size()));
  for (Eigen::Index i = 0; i < scene.size(); ++i) put_record(out, scene, i);
  return out;
}

GaussianScene decode_lpsl(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kLpslHeaderBytes || std::memcmp(bytes.data(), "LPSL", 4) != 0) {
    throw IoError("LPSL: bad magic");
  }
  const std::uint8_t* src = bytes.data() + 4;
  const auto version = take<std::uint32_t>(src);
  if (version != kLpslVersion) throw IoError("LPSL: unsupported version " + std::to_string(version));
  const auto count = take<std::uint32_t>(src);
  if (bytes.size() != kLpslHeaderBytes + kLpslRecordBytes * count) {
    throw IoError("LPSL: file size does not match the record count");
  }
  std::vector<Gaussian> gaussians(count);
  for (auto& g : gaussians) {
    for (int k = 0; k < 3; ++k) g.mean[k] = take<float>(src);
    for (int k = 0; k < 3; ++k) g.scale[k] = take<float>(src);
    const float w = take<float>(src), x = take<float>(src), y = take<float>(src), z = take<float>(src);
    g.rotation = Eigen::Quaterniond(w, x, y, z);
    g.opacity = take<float>(src);
    for (int k = 0; k < 3; ++k) g.color[k] = take<float>(src);
    g.layer_id = take<std::uint32_t>(src);
    const auto frozen = take<std::uint8_t>(src);
    if (frozen > 1) throw IoError("LPSL: frozen flag must be 0 or 1");
    g.frozen = frozen == 1;
  }
  GaussianScene scene;
  try {
    scene.append(gaussians);
  } catch (const DomainError& e) {
    throw IoError(std::string("LPSL: invalid record: ") + e.what());
  }
  return scene;
}

void save_lpsl(const std::filesystem::path& path, const GaussianScene& scene) {
  const auto bytes = encode_lpsl(scene);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

GaussianScene load_lpsl(const std::filesystem::path& path) { return decode_lpsl(read_all(path)); }

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw IoError("sha256: digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

nlohmann::json scene_manifest(const GaussianScene& scene, const std::filesystem::path& scene_file,
                              const nlohmann::json& config, const nlohmann::json& provenance) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::uint32_t l = 0; l < scene.layer_count(); ++l) {
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < scene.size(); ++i) count += scene.layer_id(i) == l ? 1 : 0;
    layers.push_back({{"layer_id", l}, {"count", count}});
  }
  return {{"format", "LPSL"},
          {"version", kLpslVersion},
          {"scene_file", scene_file.filename().string()},
          {"count", scene.size()},
          {"layer_count", scene.layer_count()},
          {"layers", layers},
          {"config", config},
          {"provenance", provenance}};
}

}  // namespace layerpano
