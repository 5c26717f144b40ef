// SPDX-License-Identifier: Apache-2.0
#include "layerpano/erp.hpp"

#include <algorithm>
#include <cmath>

namespace layerpano {

Panorama::Panorama(Image rgb, std::optional<DepthMap> depth) : rgb_(std::move(rgb)), depth_(std::move(depth)) {
  require(!rgb_.empty(), "panorama: empty image");
  require(rgb_.width() == 2 * rgb_.height(), "panorama: width must equal twice the height, got " +
                                                 std::to_string(rgb_.width()) + "x" +
                                                 std::to_string(rgb_.height()));
  for (const auto& c : rgb_.channel) {
    require(c.allFinite() && (c >= 0.0).all() && (c <= 1.0).all(), "panorama: colors must lie in [0,1]");
  }
  if (depth_) {
    require(depth_->rows() == rgb_.height() && depth_->cols() == rgb_.width(),
            "panorama: depth size does not match image");
    require(depth_->allFinite() && (*depth_ > 0.0).all(), "panorama: depth must be finite and positive");
  }
}

const DepthMap& Panorama::depth() const {
  require(depth_.has_value(), "panorama: no depth attached");
  return *depth_;
}

const Eigen::Matrix3d& camera_axes() {
  static const Eigen::Matrix3d axes = (Eigen::Matrix3d() << 0, 0, 1, 0, 1, 0, 1, 0, 0).finished();
  return axes;
}

void PinholeCamera::validate() const {
  require(position.allFinite(), "camera: position must be finite");
  require(std::abs(orientation.norm() - 1.0) <= 1e-6, "camera: orientation must be a unit quaternion");
  require(fov_deg > 0.0 && fov_deg < 180.0, "camera: fov must lie strictly inside (0, 180)");
  require(width > 0 && height > 0, "camera: image size must be positive");
}

double PinholeCamera::focal() const {
  return 0.5 * width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
}

Eigen::Matrix3d PinholeCamera::camera_to_world() const {
  return orientation.normalized().toRotationMatrix() * camera_axes();
}

Eigen::Vector3d PinholeCamera::ray_direction(double x, double y) const {
  const double f = focal();
  const Eigen::Vector3d cam((x - cx()) / f, (y - cy()) / f, 1.0);
  return camera_to_world() * cam.normalized();
}

Eigen::Quaterniond orientation_from_angles(double theta, double phi) {
  const Eigen::Quaterniond yaw(Eigen::AngleAxisd(-theta, Eigen::Vector3d::UnitY()));
  const Eigen::Quaterniond pitch(Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitZ()));
  return (yaw * pitch).normalized();
}

Image extract_perspective_view(const Panorama& pano, const PinholeCamera& cam) {
  cam.validate();
  require(cam.position.norm() <= 1e-12, "extract_perspective_view: camera must sit at the panorama center");
  const Eigen::Matrix3d to_world = cam.camera_to_world();
  const double f = cam.focal();
  Image out(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d dir = to_world * Eigen::Vector3d((x - cam.cx()) / f, (y - cam.cy()) / f, 1.0);
      const auto s = cartesian_to_spherical<double>(dir);
      const Eigen::Vector2d uv = angles_to_pixel(s.theta, s.phi, pano.width(), pano.height());
      for (int k = 0; k < 3; ++k) out.channel[k](y, x) = sample_bilinear(pano.rgb().channel[k], uv.x(), uv.y());
    }
  }
  return out;
}

UprightResult upright_variance_filter(std::span<const CalibrationEstimate> estimates) {
  require(estimates.size() >= 2, "upright_variance_filter: need at least two estimates");
  const auto n = static_cast<Eigen::Index>(estimates.size());
  Eigen::ArrayXd pitch(n), roll(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = estimates[static_cast<std::size_t>(i)];
    require(std::isfinite(e.pitch_deg) && std::isfinite(e.roll_deg), "upright_variance_filter: non-finite estimate");
    pitch[i] = e.pitch_deg;
    roll[i] = e.roll_deg;
  }
  // Sorted summation keeps the result independent of input order.
  std::sort(pitch.begin(), pitch.end());
  std::sort(roll.begin(), roll.end());
  UprightResult r;
  r.pitch_variance = (pitch - pitch.mean()).square().mean();
  r.roll_variance = (roll - roll.mean()).square().mean();
  r.upright = !(r.pitch_variance > kUprightVarianceThreshold || r.roll_variance > kUprightVarianceThreshold);
  return r;
}

}  // namespace layerpano
