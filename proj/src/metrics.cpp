// SPDX-License-Identifier: Apache-2.0
#include "layerpano/metrics.hpp"

#include "layerpano/loss.hpp"

#include <algorithm>
#include <cmath>

namespace layerpano {

double psnr(const Image& a, const Image& b, const Mask* mask) {
  require(a.width() == b.width() && a.height() == b.height(), "psnr: image sizes differ");
  require(!a.empty(), "psnr: empty image");
  if (mask) require(same_size(*mask, a.width(), a.height()), "psnr: mask size differs from the image");
  double sum = 0.0;
  double count = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Plane<double> sq = (a.channel[k] - b.channel[k]).square();
    if (mask) {
      sum += mask->select(sq, 0.0).sum();
      count += static_cast<double>(mask->count());
    } else {
      sum += sq.sum();
      count += static_cast<double>(sq.size());
    }
  }
  require(count > 0.0, "psnr: empty mask");
  const double mse = sum / count;
  if (mse == 0.0) return kMaxPsnr;
  return std::min(kMaxPsnr, -10.0 * std::log10(mse));
}

MetricsReport compute_metrics(const std::vector<Image>& renders, const std::vector<Image>& references) {
  require(renders.size() == references.size(), "metrics: render and reference counts differ");
  require(!renders.empty(), "metrics: no frames");
  MetricsReport report;
  for (std::size_t i = 0; i < renders.size(); ++i) {
    FrameMetrics m{psnr(renders[i], references[i]), ssim(renders[i], references[i])};
    report.mean_psnr += m.psnr;
    report.mean_ssim += m.ssim;
    report.frames.push_back(m);
  }
  report.mean_psnr /= static_cast<double>(renders.size());
  report.mean_ssim /= static_cast<double>(renders.size());
  return report;
}

double hole_fraction(const Plane<double>& alpha) {
  require(alpha.size() > 0, "hole_fraction: empty image");
  return static_cast<double>((alpha < 0.5).count()) / static_cast<double>(alpha.size());
}

}  // namespace layerpano
