#pragma once

#include "ddrgs/types.hpp"

namespace ddrgs {

/// Windowed SSIM constants. The window is a normalized 11-tap Gaussian
/// (sigma 1.5) applied separably with zero padding, so the local statistics
/// near the border see the padding exactly like a "same" convolution would.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean of the per-pixel, per-channel SSIM map.
double ssim(const Image& a, const Image& b, const SsimParams& p = {});

/// As ssim(), and writes d(mean SSIM)/d(a) scaled by `upstream` into `grad_a`
/// (overwritten, same shape as `a`).
double ssim_with_grad(const Image& a, const Image& b, double upstream, Image& grad_a, const SsimParams& p = {});

/// Normalized 1D Gaussian taps used for both passes.
std::vector<double> gaussian_window(int size, double sigma);

}  // namespace ddrgs
