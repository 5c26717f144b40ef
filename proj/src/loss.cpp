// SPDX-License-Identifier: Apache-2.0
#include "layerpano/loss.hpp"

#include <cmath>

namespace layerpano {

const std::array<double, kSsimWindow>& ssim_window() {
  static const std::array<double, kSsimWindow> window = [] {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return window;
}

namespace {

using PlaneD = Plane<double>;

// Separable Gaussian filter with zero padding. The window is symmetric, so this
// is also its own adjoint.
PlaneD blur(const PlaneD& in) {
  const auto& w = ssim_window();
  constexpr int r = kSsimWindow / 2;
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  PlaneD tmp = PlaneD::Zero(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < cols) acc += w[static_cast<std::size_t>(k + r)] * in(y, xx);
      }
      tmp(y, x) = acc;
    }
  }
  PlaneD out = PlaneD::Zero(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int k = -r; k <= r; ++k) {
      const int yy = y + k;
      if (yy >= 0 && yy < rows) out.row(y) += w[static_cast<std::size_t>(k + r)] * tmp.row(yy);
    }
  }
  return out;
}

struct SsimTerms {
  PlaneD map, d_mu, d_exx, d_exy;
};

SsimTerms ssim_terms(const PlaneD& x, const PlaneD& y, bool with_grad) {
  const PlaneD mu_x = blur(x);
  const PlaneD mu_y = blur(y);
  const PlaneD var_x = blur(x * x) - mu_x * mu_x;
  const PlaneD var_y = blur(y * y) - mu_y * mu_y;
  const PlaneD cov = blur(x * y) - mu_x * mu_y;
  const PlaneD a1 = 2.0 * mu_x * mu_y + kSsimC1;
  const PlaneD a2 = 2.0 * cov + kSsimC2;
  const PlaneD b1 = mu_x * mu_x + mu_y * mu_y + kSsimC1;
  const PlaneD b2 = var_x + var_y + kSsimC2;
  SsimTerms t;
  t.map = (a1 * a2) / (b1 * b2);
  if (with_grad) {
    // Arranged so that every term cancels exactly when x == y.
    t.d_mu = 2.0 * (mu_y * (a2 - a1) - mu_x * t.map * (b2 - b1)) / (b1 * b2);
    t.d_exx = -t.map / b2;
    t.d_exy = 2.0 * (a1 / b1) / b2;
  }
  return t;
}

}  // namespace

Plane<double> ssim_map(const Plane<double>& x, const Plane<double>& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), "ssim: image sizes differ");
  return ssim_terms(x, y, false).map;
}

double ssim(const Image& a, const Image& b) {
  require(a.width() == b.width() && a.height() == b.height(), "ssim: image sizes differ");
  require(!a.empty(), "ssim: empty image");
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) sum += ssim_map(a.channel[k], b.channel[k]).mean();
  return sum / 3.0;
}

LossResult compute_loss(const Image& render, const Image& target, const Mask* mask, double lambda) {
  require(render.width() == target.width() && render.height() == target.height(),
          "compute_loss: render and target sizes differ");
  require(!render.empty(), "compute_loss: empty image");
  require(lambda >= 0.0 && lambda <= 1.0, "compute_loss: lambda must lie in [0, 1]");
  const int w = render.width();
  const int h = render.height();
  if (mask) require(same_size(*mask, w, h), "compute_loss: mask size differs from the image");

  PlaneD weight = mask ? mask->cast<double>().eval() : PlaneD::Ones(h, w);
  const double count = weight.sum();
  LossResult out;
  out.gradient = Image(w, h);
  if (count == 0.0) return out;
  weight /= 3.0 * count;

  double l1 = 0.0, ssim_sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const PlaneD& x = render.channel[k];
    const PlaneD& y = target.channel[k];
    const PlaneD diff = x - y;
    l1 += (weight * diff.abs()).sum();
    const SsimTerms t = ssim_terms(x, y, true);
    ssim_sum += (weight * t.map).sum();
    const PlaneD d_ssim = blur(weight * t.d_mu) + 2.0 * x * blur(weight * t.d_exx) + y * blur(weight * t.d_exy);
    out.gradient.channel[k] = (1.0 - lambda) * weight * diff.sign() - 0.5 * lambda * d_ssim;
  }
  out.l1 = l1;
  out.ssim = ssim_sum;
  out.value = (1.0 - lambda) * l1 + lambda * 0.5 * (1.0 - ssim_sum);
  return out;
}

}  // namespace layerpano
