// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/image.hpp"

#include <vector>

namespace layerpano {

inline constexpr double kMaxPsnr = 99.0;

/// PSNR in dB for images in [0, 1]; 99 dB when the images are identical.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr);

struct FrameMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

MetricsReport compute_metrics(const std::vector<Image>& renders, const std::vector<Image>& references);

/// Fraction of pixels whose accumulated opacity is below 0.5.
double hole_fraction(const Plane<double>& alpha);

}  // namespace layerpano
