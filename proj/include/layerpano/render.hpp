// SPDX-License-Identifier: Apache-2.0
//
// CPU splatting renderer. Gaussians are projected with the local affine
// (EWA) approximation of the perspective map, sorted by camera depth and
// alpha-composited front to back. The backward pass returns exact gradients of
// a loss on the color image with respect to the scene parameter matrix.
#pragma once

#include "layerpano/erp.hpp"
#include "layerpano/gaussian_scene.hpp"

#include <limits>
#include <vector>

namespace layerpano {

struct RenderSettings {
  double alpha_max = 0.99;
  double alpha_min = 1.0 / 255.0;       ///< weaker splat contributions are skipped
  double transmittance_min = 1e-4;      ///< a pixel stops once transmittance would drop below this
  double cutoff_sigma = 3.0;            ///< footprint radius in standard deviations
  double dilation = 0.3;                ///< added to the 2D covariance diagonal (pixels^2)
  double near_plane = 0.05;
  double frustum_margin = 1.3;          ///< tangent clamp relative to the half field of view
  bool radial_depth = false;            ///< depth output accumulates distance from the camera, not z
  Eigen::Vector3d background = Eigen::Vector3d::Zero();

  /// Settings with every early-out disabled, for smooth end-to-end derivatives.
  static RenderSettings exact() {
    RenderSettings s;
    s.alpha_min = 0.0;
    s.transmittance_min = 0.0;
    s.cutoff_sigma = std::numeric_limits<double>::infinity();
    return s;
  }
};

struct RenderOutput {
  Image color;
  Plane<double> alpha;  ///< accumulated opacity
  Plane<double> depth;  ///< opacity-weighted camera depth (radial distance for panoramas)
};

/// One rendered view that can propagate image gradients back to the scene.
class SplatRasterizer {
 public:
  SplatRasterizer(const GaussianScene& scene, const PinholeCamera& cam, const RenderSettings& settings = {});

  const RenderOutput& output() const { return output_; }

  /// Accumulates dL/dparams into `grad` (14 x N) given dL/dcolor. Frozen
  /// gaussians receive no gradient unless `include_frozen` is set.
  void backward(const Image& dl_dcolor, ParamMatrix& grad, bool include_frozen = false) const;

 private:
  struct Splat {
    Eigen::Index index = 0;
    Eigen::Vector3d t;          // camera-space mean
    Eigen::Vector2d mean2d;
    Eigen::Matrix2d conic;      // inverse 2D covariance
    Eigen::Matrix<double, 2, 3> J;
    Eigen::Matrix3d cov_cam;
    Eigen::Matrix3d rotation;
    Eigen::Vector3d scale;
    Eigen::Vector3d color;
    double opacity = 0.0;
    bool clamped_x = false, clamped_y = false;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  };

  bool project(Eigen::Index i, Splat& s) const;
  double weight(const Splat& s, int x, int y, double& dx, double& dy) const;

  const GaussianScene& scene_;
  PinholeCamera cam_;
  RenderSettings settings_;
  Eigen::Matrix3d world_to_cam_;
  std::vector<Splat> splats_;               // in compositing order
  std::vector<double> final_t_;             // per pixel
  std::vector<std::int32_t> stop_rank_;     // per pixel; splats at this rank or later were not blended
  RenderOutput output_;
};

inline RenderOutput render_pinhole(const GaussianScene& scene, const PinholeCamera& cam,
                                   const RenderSettings& settings = {}) {
  return SplatRasterizer(scene, cam, settings).output();
}

/// Equirectangular render around `center`: six cube faces resampled bilinearly.
/// Depth is radial distance from the center.
RenderOutput render_equirect(const GaussianScene& scene, int width, int height,
                             const Eigen::Vector3d& center = Eigen::Vector3d::Zero(),
                             const RenderSettings& settings = {});

/// Camera looking along each cube axis from `center`, sized to cover `face` pixels
/// plus a two pixel apron on every side.
std::vector<PinholeCamera> cube_face_cameras(const Eigen::Vector3d& center, int face);

/// Rotation matrix of a unit quaternion (w, x, y, z).
Eigen::Matrix3d quaternion_matrix(const Eigen::Vector4d& q);

}  // namespace layerpano
