// SPDX-License-Identifier: Apache-2.0
//
// Equirectangular projection (ERP) geometry.
//
// Pixel (u, v) of a W x H panorama maps to azimuth theta = (2u/W - 1) pi and
// elevation phi = (2v/H - 1) pi/2. A direction (theta, phi) at metric depth d
// lifts to X = d cos(phi) cos(theta), Y = d sin(phi), Z = d cos(phi) sin(theta).
// With this convention v grows downward in the image and so does world Y.
#pragma once

#include "layerpano/image.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace layerpano {

template <typename Scalar>
struct SphericalCoordT {
  Scalar theta{0};  ///< azimuth in [-pi, pi]
  Scalar phi{0};    ///< elevation in [-pi/2, pi/2]
  Scalar depth{1};  ///< metric distance, > 0
};
using SphericalCoord = SphericalCoordT<double>;

template <typename Scalar>
SphericalCoordT<Scalar> pixel_to_angles(Scalar u, Scalar v, int width, int height) {
  require(width > 0 && height > 0, "pixel_to_angles: empty image");
  require(u >= Scalar(0) && u < Scalar(width) && v >= Scalar(0) && v < Scalar(height),
          "pixel_to_angles: pixel outside image");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  return {(Scalar(2) * u / Scalar(width) - Scalar(1)) * pi,
          (Scalar(2) * v / Scalar(height) - Scalar(1)) * pi / Scalar(2), Scalar(1)};
}

/// Continuous pixel coordinate of a direction; u lands in [0, W], v in [0, H].
template <typename Scalar>
Vec2<Scalar> angles_to_pixel(Scalar theta, Scalar phi, int width, int height) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  require(width > 0 && height > 0, "angles_to_pixel: empty image");
  require(theta >= -pi && theta <= pi && phi >= -pi / Scalar(2) && phi <= pi / Scalar(2),
          "angles_to_pixel: angles out of range");
  return {(theta / pi + Scalar(1)) * Scalar(width) / Scalar(2),
          (Scalar(2) * phi / pi + Scalar(1)) * Scalar(height) / Scalar(2)};
}

template <typename Scalar>
Vec3<Scalar> spherical_to_cartesian(const SphericalCoordT<Scalar>& c) {
  require(c.depth > Scalar(0), "spherical_to_cartesian: depth must be positive");
  using std::cos;
  using std::sin;
  const Scalar cos_phi = cos(c.phi);
  return {c.depth * cos_phi * cos(c.theta), c.depth * sin(c.phi), c.depth * cos_phi * sin(c.theta)};
}

/// Inverse of spherical_to_cartesian. At the poles theta is defined as 0.
template <typename Scalar>
SphericalCoordT<Scalar> cartesian_to_spherical(const Vec3<Scalar>& p) {
  using std::atan2;
  using std::hypot;
  const Scalar horizontal = hypot(p.x(), p.z());
  const Scalar depth = hypot(horizontal, p.y());
  require(depth > Scalar(0), "cartesian_to_spherical: zero vector");
  const Scalar theta = horizontal > Scalar(0) ? atan2(p.z(), p.x()) : Scalar(0);
  return {theta, atan2(p.y(), horizontal), depth};
}

/// Unit view direction for azimuth theta and elevation phi (ERP convention).
template <typename Scalar>
Vec3<Scalar> direction_from_angles(Scalar theta, Scalar phi) {
  return spherical_to_cartesian(SphericalCoordT<Scalar>{theta, phi, Scalar(1)});
}

/// Bilinear sample with horizontal wraparound and vertical clamping.
template <typename Scalar>
Scalar sample_bilinear(const Plane<Scalar>& plane, Scalar u, Scalar v) {
  using std::floor;
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  v = std::clamp(v, Scalar(0), Scalar(h - 1));
  const Scalar u0f = floor(u);
  const Scalar v0f = floor(v);
  const Scalar fu = u - u0f;
  const Scalar fv = v - v0f;
  auto wrap = [w](long x) { return static_cast<int>(((x % w) + w) % w); };
  const int u0 = wrap(static_cast<long>(u0f));
  const int u1 = wrap(static_cast<long>(u0f) + 1);
  const int v0 = static_cast<int>(v0f);
  const int v1 = std::min(v0 + 1, h - 1);
  return (Scalar(1) - fv) * ((Scalar(1) - fu) * plane(v0, u0) + fu * plane(v0, u1)) +
         fv * ((Scalar(1) - fu) * plane(v1, u0) + fu * plane(v1, u1));
}

/// Samples a panorama plane along a world direction.
template <typename Scalar>
Scalar sample_direction(const Plane<Scalar>& plane, const Vec3<Scalar>& dir) {
  const auto s = cartesian_to_spherical(dir);
  const Vec2<Scalar> uv = angles_to_pixel(s.theta, s.phi, static_cast<int>(plane.cols()),
                                          static_cast<int>(plane.rows()));
  return sample_bilinear(plane, uv.x(), uv.y());
}

/// Pinhole camera. The camera frame is x right, y down, z forward; the identity
/// orientation looks along world +X with image right toward +Z and image down
/// toward +Y, so an identity camera at the origin sees the panorama center.
struct PinholeCamera {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  double fov_deg = 90.0;  ///< horizontal field of view
  int width = 64;
  int height = 64;

  void validate() const;

  double focal() const;
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }

  /// Rotation taking camera-frame vectors to world vectors.
  Eigen::Matrix3d camera_to_world() const;
  Eigen::Matrix3d world_to_camera() const { return camera_to_world().transpose(); }

  /// World-space unit ray through pixel coordinate (x, y); pixel i sits at coordinate i.
  Eigen::Vector3d ray_direction(double x, double y) const;
};

/// Fixed permutation mapping camera axes (right, down, forward) to world (Z, Y, X).
const Eigen::Matrix3d& camera_axes();

/// Orientation whose forward axis points along direction_from_angles(theta, phi).
Eigen::Quaterniond orientation_from_angles(double theta, double phi);

/// Perspective view extracted from a panorama by bilinear sampling along each pixel ray.
Image extract_perspective_view(const Panorama& pano, const PinholeCamera& cam);

struct CalibrationEstimate {
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
};

struct UprightResult {
  bool upright = true;
  double pitch_variance = 0.0;
  double roll_variance = 0.0;
};

inline constexpr double kUprightVarianceThreshold = 1.0;

/// Population variance of per-view pitch and roll; fails when either exceeds 1.0.
UprightResult upright_variance_filter(std::span<const CalibrationEstimate> estimates);

}  // namespace layerpano
