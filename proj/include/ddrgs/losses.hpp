#pragma once

#include "ddrgs/gradient_set.hpp"
#include "ddrgs/rasterizer.hpp"
#include "ddrgs/ssim.hpp"

#include <span>
#include <vector>

namespace ddrgs {

/// How min-max statistics are taken before mu-law compression.
enum class HdrNormalization { global, per_channel };

struct LossConfig {
  double lambda_dssim = 0.2;
  double gamma_hdr = 0.0;       // weight of the HDR constraint; 0 disables it
  double mu = 5000.0;           // mu-law compression strength
  double norm_epsilon = 1e-8;   // floor on (max - min) during normalization
  HdrNormalization normalization = HdrNormalization::global;

  void validate() const;
};

/// A scalar loss together with its cotangent with respect to the first image.
struct ImageLoss {
  double value = 0.0;
  Image grad;
};

/// mean |r - t| + lambda * (1 - SSIM(r, t)) / 2.
ImageLoss loss_photometric(const Image& rendered, const Image& target, double lambda, bool want_grad = true);

/// log(1 + mu x) / log(1 + mu). Exact at both endpoints.
double mu_law(double x, double mu);
Image mu_law(const Image& x, double mu);

/// (x - min) / max(max - min, eps), statistics per image or per channel.
Image minmax_normalize(const Image& x, double eps, HdrNormalization mode = HdrNormalization::global);

/// Mean squared difference of mu-law compressed, min-max normalized rasters.
/// Only the rendered raster receives a gradient.
ImageLoss loss_hdr_constraint(const Image& rendered, const Image& target, double mu, double eps,
                              HdrNormalization mode = HdrNormalization::global, bool want_grad = true);

/// One supervised view. Targets are borrowed, not owned.
struct ViewTarget {
  Camera camera;                 // exposure_time is the LDR exposure
  const Image* ldr = nullptr;
  const Image* hdr = nullptr;    // required iff gamma_hdr > 0
};

struct LossTotal {
  double total = 0.0;
  double photometric = 0.0;      // summed over the batch
  double hdr_constraint = 0.0;   // summed over the batch, before gamma
  GradientSet grads;             // empty unless requested
  std::vector<ViewspaceStats> stats;
  std::vector<DualImage> renders;
};

/// Sum over the batch of loss_photometric + gamma * loss_hdr_constraint,
/// differentiated through rasterize_dual_backward when `with_grad`.
LossTotal loss_total(const DdrScene& scene, std::span<const ViewTarget> batch, const LossConfig& cfg,
                     const RasterConfig& raster = {}, bool with_grad = true);

}  // namespace ddrgs
