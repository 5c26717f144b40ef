// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layerpano/image.hpp"

namespace layerpano {

inline constexpr double kDefaultSsimWeight = 0.2;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct LossResult {
  double value = 0.0;
  double l1 = 0.0;
  double ssim = 1.0;
  Image gradient;  ///< dL/d(render)
};

/// (1 - lambda) L1 + lambda (1 - SSIM) / 2. SSIM uses an 11 x 11 Gaussian window
/// (sigma 1.5) with zero padding. With a mask, both terms average over masked
/// pixels only.
LossResult compute_loss(const Image& render, const Image& target, const Mask* mask = nullptr,
                        double lambda = kDefaultSsimWeight);

/// Per-pixel SSIM of one channel pair.
Plane<double> ssim_map(const Plane<double>& x, const Plane<double>& y);

/// Mean SSIM over pixels and channels.
double ssim(const Image& a, const Image& b);

/// Normalized 1-D Gaussian window of length 11.
const std::array<double, kSsimWindow>& ssim_window();

}  // namespace layerpano
