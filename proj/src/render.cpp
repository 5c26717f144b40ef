// SPDX-License-Identifier: Apache-2.0
#include "layerpano/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace layerpano {

Eigen::Matrix3d quaternion_matrix(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

namespace {

// dL/dq for R(q) with q already unit length.
Eigen::Vector4d quaternion_matrix_grad(const Eigen::Vector4d& q, const Eigen::Matrix3d& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d dw, dx, dy, dz;
  dw << 0, -2 * z, 2 * y,
        2 * z, 0, -2 * x,
        -2 * y, 2 * x, 0;
  dx << 0, 2 * y, 2 * z,
        2 * y, -4 * x, -2 * w,
        2 * z, 2 * w, -4 * x;
  dy << -4 * y, 2 * x, 2 * w,
        2 * x, 0, 2 * z,
        -2 * w, 2 * z, -4 * y;
  dz << -4 * z, -2 * w, 2 * x,
        2 * w, -4 * z, 2 * y,
        2 * x, 2 * y, 0;
  return {(g.array() * dw.array()).sum(), (g.array() * dx.array()).sum(), (g.array() * dy.array()).sum(),
          (g.array() * dz.array()).sum()};
}

}  // namespace

SplatRasterizer::SplatRasterizer(const GaussianScene& scene, const PinholeCamera& cam, const RenderSettings& settings)
    : scene_(scene), cam_(cam), settings_(settings) {
  cam_.validate();
  world_to_cam_ = cam_.world_to_camera();
  const int w = cam_.width;
  const int h = cam_.height;

  splats_.reserve(static_cast<std::size_t>(scene.size()));
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    Splat s;
    if (project(i, s)) splats_.push_back(s);
  }
  // Distance from the camera is invariant under camera rotation, so views sharing a center agree on order.
  std::vector<std::pair<double, std::size_t>> keys(splats_.size());
  for (std::size_t k = 0; k < splats_.size(); ++k) keys[k] = {splats_[k].t.squaredNorm(), k};
  std::sort(keys.begin(), keys.end());
  std::vector<Splat> sorted;
  sorted.reserve(splats_.size());
  for (const auto& key : keys) sorted.push_back(splats_[key.second]);
  splats_ = std::move(sorted);

  const auto npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  final_t_.assign(npix, 1.0);
  stop_rank_.assign(npix, std::numeric_limits<std::int32_t>::max());
  std::vector<Eigen::Vector3d> color(npix, Eigen::Vector3d::Zero());
  std::vector<double> depth(npix, 0.0);

  for (std::size_t rank = 0; rank < splats_.size(); ++rank) {
    const Splat& s = splats_[rank];
    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        if (stop_rank_[p] != std::numeric_limits<std::int32_t>::max()) continue;
        double dx, dy;
        const double g = weight(s, x, y, dx, dy);
        if (g <= 0.0) continue;
        const double alpha = std::min(settings_.alpha_max, s.opacity * g);
        if (alpha < settings_.alpha_min) continue;
        const double t = final_t_[p];
        const double next_t = t * (1.0 - alpha);
        if (next_t < settings_.transmittance_min) {
          stop_rank_[p] = static_cast<std::int32_t>(rank);
          continue;
        }
        color[p] += s.color * (alpha * t);
        depth[p] += (settings_.radial_depth ? s.t.norm() : s.t.z()) * alpha * t;
        final_t_[p] = next_t;
      }
    }
  }

  output_.color = Image(w, h);
  output_.alpha = Plane<double>(h, w);
  output_.depth = Plane<double>(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      const double t = final_t_[p];
      output_.color.set_pixel(x, y, color[p] + settings_.background * t);
      output_.alpha(y, x) = 1.0 - t;
      output_.depth(y, x) = depth[p];
    }
  }
}

bool SplatRasterizer::project(Eigen::Index i, Splat& s) const {
  const auto& params = scene_.params();
  s.index = i;
  s.t = world_to_cam_ * (params.block<3, 1>(param::kMean, i) - cam_.position);
  const double tz = s.t.z();
  if (!(tz > settings_.near_plane)) return false;

  const double f = cam_.focal();
  const double lim_x = settings_.frustum_margin * 0.5 * cam_.width / f;
  const double lim_y = settings_.frustum_margin * 0.5 * cam_.height / f;
  const double rx = s.t.x() / tz;
  const double ry = s.t.y() / tz;
  s.clamped_x = rx < -lim_x || rx > lim_x;
  s.clamped_y = ry < -lim_y || ry > lim_y;
  const double tx = std::clamp(rx, -lim_x, lim_x) * tz;
  const double ty = std::clamp(ry, -lim_y, lim_y) * tz;
  s.J << f / tz, 0.0, -f * tx / (tz * tz),
         0.0, f / tz, -f * ty / (tz * tz);
  s.mean2d << f * s.t.x() / tz + cam_.cx(), f * s.t.y() / tz + cam_.cy();

  // Cheap conservative cull: the footprint radius is bounded by |J|_F times the largest scale.
  if (!std::isinf(settings_.cutoff_sigma)) {
    const double smax = std::exp(params.block<3, 1>(param::kLogScale, i).maxCoeff());
    const double reach = 1e-6 + (1.0 + 1e-9) * settings_.cutoff_sigma *
                                    std::sqrt(s.J.squaredNorm() * smax * smax + settings_.dilation);
    if (s.mean2d.x() + reach < 0.0 || s.mean2d.y() + reach < 0.0 || s.mean2d.x() - reach > cam_.width - 1 ||
        s.mean2d.y() - reach > cam_.height - 1) {
      return false;
    }
  }

  const Eigen::Vector4d q = params.block<4, 1>(param::kRotation, i).normalized();
  s.rotation = quaternion_matrix(q);
  s.scale = params.block<3, 1>(param::kLogScale, i).array().exp();
  const Eigen::Matrix3d m = s.rotation * s.scale.asDiagonal();
  s.cov_cam = world_to_cam_ * (m * m.transpose()) * world_to_cam_.transpose();
  Eigen::Matrix2d cov2d = s.J * s.cov_cam * s.J.transpose();
  cov2d.diagonal().array() += settings_.dilation;
  const double det = cov2d.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) return false;
  s.conic = cov2d.inverse();
  s.conic(0, 1) = s.conic(1, 0) = 0.5 * (s.conic(0, 1) + s.conic(1, 0));

  if (std::isinf(settings_.cutoff_sigma)) {
    s.x0 = 0;
    s.y0 = 0;
    s.x1 = cam_.width - 1;
    s.y1 = cam_.height - 1;
  } else {
    const double ex = settings_.cutoff_sigma * std::sqrt(cov2d(0, 0));
    const double ey = settings_.cutoff_sigma * std::sqrt(cov2d(1, 1));
    const double fx0 = std::ceil(s.mean2d.x() - ex), fx1 = std::floor(s.mean2d.x() + ex);
    const double fy0 = std::ceil(s.mean2d.y() - ey), fy1 = std::floor(s.mean2d.y() + ey);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > cam_.width - 1 || fy0 > cam_.height - 1) return false;
    s.x0 = static_cast<int>(std::max(fx0, 0.0));
    s.y0 = static_cast<int>(std::max(fy0, 0.0));
    s.x1 = static_cast<int>(std::min(fx1, cam_.width - 1.0));
    s.y1 = static_cast<int>(std::min(fy1, cam_.height - 1.0));
  }
  s.color = params.block<3, 1>(param::kColor, i);
  s.opacity = sigmoid(params(param::kOpacity, i));
  return true;
}

double SplatRasterizer::weight(const Splat& s, int x, int y, double& dx, double& dy) const {
  dx = x - s.mean2d.x();
  dy = y - s.mean2d.y();
  const double m2 = s.conic(0, 0) * dx * dx + 2.0 * s.conic(0, 1) * dx * dy + s.conic(1, 1) * dy * dy;
  if (m2 > settings_.cutoff_sigma * settings_.cutoff_sigma) return 0.0;
  return std::exp(-0.5 * m2);
}

void SplatRasterizer::backward(const Image& dl_dcolor, ParamMatrix& grad, bool include_frozen) const {
  const int w = cam_.width;
  const int h = cam_.height;
  require(dl_dcolor.width() == w && dl_dcolor.height() == h, "backward: gradient image size does not match the view");
  require(grad.cols() == scene_.size(), "backward: gradient matrix does not match the scene");

  const auto npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> t_cur(final_t_);
  std::vector<Eigen::Vector3d> behind(npix);
  std::vector<Eigen::Vector3d> g_pix(npix);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      g_pix[p] = dl_dcolor.pixel(x, y);
      behind[p] = settings_.background * final_t_[p];
    }
  }

  const double f = cam_.focal();
  for (std::size_t r = splats_.size(); r-- > 0;) {
    const Splat& s = splats_[r];
    const bool wants_grad = include_frozen || !scene_.frozen(s.index);
    Eigen::Vector2d d_mean2d = Eigen::Vector2d::Zero();
    double d_a = 0.0, d_b = 0.0, d_c = 0.0;  // conic entries (0,0), (0,1)=(1,0), (1,1)
    double d_opacity = 0.0;
    Eigen::Vector3d d_color = Eigen::Vector3d::Zero();
    const auto rank = static_cast<std::int32_t>(r);

    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        if (rank >= stop_rank_[p]) continue;
        double dx, dy;
        const double g = weight(s, x, y, dx, dy);
        if (g <= 0.0) continue;
        const double raw_alpha = s.opacity * g;
        const double alpha = std::min(settings_.alpha_max, raw_alpha);
        if (alpha < settings_.alpha_min) continue;
        const double t_before = t_cur[p] / (1.0 - alpha);
        if (wants_grad) {
          const Eigen::Vector3d& gp = g_pix[p];
          d_color += gp * (alpha * t_before);
          const double d_alpha = gp.dot(s.color * t_before - behind[p] / (1.0 - alpha));
          if (raw_alpha < settings_.alpha_max) {
            d_opacity += d_alpha * g;
            const double d_g = d_alpha * s.opacity;
            // g = exp(-0.5 m2), m2 = a dx^2 + 2 b dx dy + c dy^2, d(dx)/d(mean.x) = -1
            d_a += -0.5 * d_g * g * dx * dx;
            d_b += -d_g * g * dx * dy;
            d_c += -0.5 * d_g * g * dy * dy;
            d_mean2d.x() += d_g * g * (s.conic(0, 0) * dx + s.conic(0, 1) * dy);
            d_mean2d.y() += d_g * g * (s.conic(0, 1) * dx + s.conic(1, 1) * dy);
          }
        }
        behind[p] += s.color * (alpha * t_before);
        t_cur[p] = t_before;
      }
    }
    if (!wants_grad) continue;

    const Eigen::Index i = s.index;
    grad.block<3, 1>(param::kColor, i) += d_color;
    grad(param::kOpacity, i) += d_opacity * s.opacity * (1.0 - s.opacity);

    // Conic to 2D covariance.
    Eigen::Matrix2d d_conic;
    d_conic << d_a, 0.5 * d_b, 0.5 * d_b, d_c;
    const Eigen::Matrix2d d_cov2d = -s.conic * d_conic * s.conic;
    // 2D covariance = J cov_cam J^T + dilation.
    const Eigen::Matrix3d d_cov_cam = s.J.transpose() * d_cov2d * s.J;
    const Eigen::Matrix<double, 2, 3> d_j = 2.0 * d_cov2d * s.J * s.cov_cam;

    const double tz = s.t.z();
    Eigen::Vector3d d_t = Eigen::Vector3d::Zero();
    d_t.x() += d_mean2d.x() * f / tz;
    d_t.y() += d_mean2d.y() * f / tz;
    d_t.z() += -(d_mean2d.x() * f * s.t.x() + d_mean2d.y() * f * s.t.y()) / (tz * tz);

    const double lim_x = settings_.frustum_margin * 0.5 * cam_.width / f;
    const double lim_y = settings_.frustum_margin * 0.5 * cam_.height / f;
    const double tx = std::clamp(s.t.x() / tz, -lim_x, lim_x) * tz;
    const double ty = std::clamp(s.t.y() / tz, -lim_y, lim_y) * tz;
    d_t.z() += -f / (tz * tz) * (d_j(0, 0) + d_j(1, 1));
    d_t.z() += 2.0 * f * (tx * d_j(0, 2) + ty * d_j(1, 2)) / (tz * tz * tz);
    const double d_tx = -f / (tz * tz) * d_j(0, 2);
    const double d_ty = -f / (tz * tz) * d_j(1, 2);
    if (s.clamped_x) {
      d_t.z() += d_tx * tx / tz;
    } else {
      d_t.x() += d_tx;
    }
    if (s.clamped_y) {
      d_t.z() += d_ty * ty / tz;
    } else {
      d_t.y() += d_ty;
    }
    grad.block<3, 1>(param::kMean, i) += world_to_cam_.transpose() * d_t;

    // World covariance = M M^T, M = R S.
    const Eigen::Matrix3d d_cov = world_to_cam_.transpose() * d_cov_cam * world_to_cam_;
    const Eigen::Matrix3d m = s.rotation * s.scale.asDiagonal();
    const Eigen::Matrix3d d_m = (d_cov + d_cov.transpose()) * m;
    for (int k = 0; k < 3; ++k) grad(param::kLogScale + k, i) += d_m.col(k).dot(s.rotation.col(k)) * s.scale[k];
    const Eigen::Matrix3d d_r = d_m * s.scale.asDiagonal();
    const Eigen::Vector4d q_raw = scene_.params().block<4, 1>(param::kRotation, i);
    const double q_norm = q_raw.norm();
    const Eigen::Vector4d q = q_raw / q_norm;
    const Eigen::Vector4d d_qn = quaternion_matrix_grad(q, d_r);
    grad.block<4, 1>(param::kRotation, i) += (d_qn - q * q.dot(d_qn)) / q_norm;
  }
}

std::vector<PinholeCamera> cube_face_cameras(const Eigen::Vector3d& center, int face) {
  require(face >= 1, "cube_face_cameras: face size must be positive");
  constexpr double pi = std::numbers::pi;
  const double half = 0.5 * face;
  const double fov = 2.0 * std::atan((half + 2.0) / half) * 180.0 / pi;
  const std::array<std::pair<double, double>, 6> angles = {
      {{0.0, 0.0}, {0.5 * pi, 0.0}, {pi, 0.0}, {-0.5 * pi, 0.0}, {0.0, -0.5 * pi}, {0.0, 0.5 * pi}}};
  std::vector<PinholeCamera> cams;
  for (const auto& [theta, phi] : angles) {
    PinholeCamera cam;
    cam.position = center;
    cam.orientation = orientation_from_angles(theta, phi);
    cam.fov_deg = fov;
    cam.width = face + 4;
    cam.height = face + 4;
    cams.push_back(cam);
  }
  return cams;
}

namespace {

double sample_clamped(const Plane<double>& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fy) * ((1 - fx) * plane(y0, x0) + fx * plane(y0, x1)) + fy * ((1 - fx) * plane(y1, x0) + fx * plane(y1, x1));
}

}  // namespace

RenderOutput render_equirect(const GaussianScene& scene, int width, int height, const Eigen::Vector3d& center,
                             const RenderSettings& settings) {
  require(width > 0 && width == 2 * height, "render_equirect: width must be twice the height");
  const int face = std::max(8, width / 4);
  const auto cams = cube_face_cameras(center, face);
  RenderSettings face_settings = settings;
  face_settings.radial_depth = true;
  std::vector<RenderOutput> faces;
  std::vector<Eigen::Matrix3d> to_cam;
  for (const auto& cam : cams) {
    faces.push_back(render_pinhole(scene, cam, face_settings));
    to_cam.push_back(cam.world_to_camera());
  }
  const double f = cams[0].focal();
  const double c = cams[0].cx();

  RenderOutput out{Image(width, height), Plane<double>(height, width), Plane<double>(height, width)};
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Eigen::Vector3d dir = spherical_to_cartesian(pixel_to_angles<double>(u, v, width, height));
      std::size_t best = 0;
      double best_z = -2.0;
      for (std::size_t k = 0; k < cams.size(); ++k) {
        const double z = to_cam[k].row(2).dot(dir);
        if (z > best_z) {
          best_z = z;
          best = k;
        }
      }
      const Eigen::Vector3d d = to_cam[best] * dir;
      const double x = f * d.x() / d.z() + c;
      const double y = f * d.y() / d.z() + c;
      const RenderOutput& src = faces[best];
      for (int k = 0; k < 3; ++k) out.color.channel[k](v, u) = sample_clamped(src.color.channel[k], x, y);
      out.alpha(v, u) = sample_clamped(src.alpha, x, y);
      out.depth(v, u) = sample_clamped(src.depth, x, y);
    }
  }
  return out;
}

}  // namespace layerpano
