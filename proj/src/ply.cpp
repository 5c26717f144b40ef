// SPDX-License-Identifier: Apache-2.0
#include "layerpano/image_io.hpp"
#include "layerpano/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace layerpano {
namespace {

static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");

constexpr std::size_t kRecordBytes = 3 * 4 + 3 + 4;

std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

template <typename T>
void put(char*& dst, T value) {
  std::memcpy(dst, &value, sizeof(T));
  dst += sizeof(T);
}

template <typename T>
T take(const char*& src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  src += sizeof(T);
  return value;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& pc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << pc.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "property int layer_id\n"
      << "end_header\n";
  std::vector<char> body(static_cast<std::size_t>(pc.size()) * kRecordBytes);
  char* dst = body.data();
  for (Eigen::Index i = 0; i < pc.size(); ++i) {
    for (int k = 0; k < 3; ++k) put(dst, static_cast<float>(pc.positions(k, i)));
    for (int k = 0; k < 3; ++k) put(dst, to_byte(pc.colors(k, i)));
    put(dst, static_cast<std::int32_t>(pc.layer_ids[i]));
  }
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError(path.string() + ": not a PLY file");

  const std::vector<std::string> expected = {"x", "y", "z", "red", "green", "blue", "layer_id"};
  std::vector<std::string> props;
  long long count = -1;
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ls >> name;
      if (name != "vertex") throw IoError(path.string() + ": unsupported element " + name);
      ls >> count;
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw IoError(path.string() + ": only binary_little_endian PLY is supported");
  if (count < 0) throw IoError(path.string() + ": missing vertex element");
  if (props != expected) throw IoError(path.string() + ": unexpected vertex properties");

  std::vector<char> body(static_cast<std::size_t>(count) * kRecordBytes);
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (in.gcount() != static_cast<std::streamsize>(body.size())) throw IoError(path.string() + ": truncated PLY body");

  PointCloud pc;
  pc.resize(static_cast<Eigen::Index>(count));
  pc.source_pixels.setConstant(-1);
  const char* src = body.data();
  for (Eigen::Index i = 0; i < pc.size(); ++i) {
    for (int k = 0; k < 3; ++k) pc.positions(k, i) = take<float>(src);
    for (int k = 0; k < 3; ++k) pc.colors(k, i) = take<std::uint8_t>(src) / 255.0;
    const auto layer = take<std::int32_t>(src);
    if (layer < 0) throw IoError(path.string() + ": negative layer id");
    pc.layer_ids[i] = static_cast<std::uint32_t>(layer);
  }
  return pc;
}

}  // namespace layerpano
