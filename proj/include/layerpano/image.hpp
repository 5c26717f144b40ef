// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace layerpano {

/// Thrown when an operation's precondition on its inputs does not hold.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// One image channel; rows index v (height), columns index u (width).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct ImageT {
  std::array<Plane<Scalar>, 3> channel;

  ImageT() = default;
  ImageT(int width, int height) {
    for (auto& c : channel) c = Plane<Scalar>::Zero(height, width);
  }

  static ImageT constant(int width, int height, const Vec3<Scalar>& rgb) {
    ImageT img;
    for (int k = 0; k < 3; ++k) img.channel[k] = Plane<Scalar>::Constant(height, width, rgb[k]);
    return img;
  }

  int width() const { return static_cast<int>(channel[0].cols()); }
  int height() const { return static_cast<int>(channel[0].rows()); }
  bool empty() const { return channel[0].size() == 0; }

  Vec3<Scalar> pixel(int u, int v) const {
    return {channel[0](v, u), channel[1](v, u), channel[2](v, u)};
  }
  void set_pixel(int u, int v, const Vec3<Scalar>& rgb) {
    for (int k = 0; k < 3; ++k) channel[k](v, u) = rgb[k];
  }

  template <typename Other>
  ImageT<Other> cast() const {
    ImageT<Other> out;
    for (int k = 0; k < 3; ++k) out.channel[k] = channel[k].template cast<Other>();
    return out;
  }
};

using Image = ImageT<double>;
using DepthMap = Plane<double>;

/// Equirectangular RGB panorama with optional metric depth. W = 2H is enforced.
class Panorama {
 public:
  Panorama() = default;
  explicit Panorama(Image rgb, std::optional<DepthMap> depth = std::nullopt);

  int width() const { return rgb_.width(); }
  int height() const { return rgb_.height(); }
  const Image& rgb() const { return rgb_; }
  bool has_depth() const { return depth_.has_value(); }
  const DepthMap& depth() const;

 private:
  Image rgb_;
  std::optional<DepthMap> depth_;
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit random draw.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

inline bool same_size(const Mask& mask, int width, int height) {
  return mask.cols() == width && mask.rows() == height;
}

}  // namespace layerpano
