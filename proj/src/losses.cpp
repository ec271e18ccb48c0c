#include "ddrgs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddrgs {

void LossConfig::validate() const {
  const auto check = [](double v, bool ok, const char* name) {
    if (!std::isfinite(v) || !ok) throw ConfigError(std::string("loss config: invalid ") + name);
  };
  check(lambda_dssim, lambda_dssim >= 0.0, "lambda_dssim");
  check(gamma_hdr, gamma_hdr >= 0.0, "gamma_hdr");
  check(mu, mu > 0.0, "mu");
  check(norm_epsilon, norm_epsilon > 0.0, "norm_epsilon");
}

ImageLoss loss_photometric(const Image& rendered, const Image& target, double lambda, bool want_grad) {
  require_same_shape(rendered, target, "loss_photometric");
  ImageLoss out;
  const double inv_n = 1.0 / static_cast<double>(rendered.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i) l1 += std::abs(rendered.data[i] - target.data[i]);
  out.value = l1 * inv_n;
  if (want_grad) {
    out.grad = Image(rendered.width, rendered.height);
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      const double d = rendered.data[i] - target.data[i];
      out.grad.data[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
  }
  if (lambda != 0.0) {
    if (want_grad) {
      Image g;
      const double s = ssim_with_grad(rendered, target, -0.5 * lambda, g);
      out.value += lambda * 0.5 * (1.0 - s);
      for (std::size_t i = 0; i < g.size(); ++i) out.grad.data[i] += g.data[i];
    } else {
      out.value += lambda * 0.5 * (1.0 - ssim(rendered, target));
    }
  }
  return out;
}

double mu_law(double x, double mu) { return std::log1p(mu * x) / std::log1p(mu); }

Image mu_law(const Image& x, double mu) {
  Image out = x;
  for (double& v : out.data) v = mu_law(v, mu);
  return out;
}

namespace {

struct Range {
  std::size_t argmin = 0, argmax = 0;
  double lo = 0.0, denom = 1.0;
  bool floored = false;
};

// Channel groups: one group over everything, or one per channel (stride 3).
template <class Fn>
void for_each_group(HdrNormalization mode, Fn&& fn) {
  if (mode == HdrNormalization::global) {
    fn(0, 1);
  } else {
    for (int c = 0; c < 3; ++c) fn(c, 3);
  }
}

Range range_of(const Image& x, std::size_t first, std::size_t stride, double eps) {
  Range r;
  r.argmin = r.argmax = first;
  for (std::size_t i = first; i < x.size(); i += stride) {
    if (x.data[i] < x.data[r.argmin]) r.argmin = i;
    if (x.data[i] > x.data[r.argmax]) r.argmax = i;
  }
  r.lo = x.data[r.argmin];
  const double span = x.data[r.argmax] - r.lo;
  r.floored = !(span > eps);
  r.denom = r.floored ? eps : span;
  return r;
}

}  // namespace

Image minmax_normalize(const Image& x, double eps, HdrNormalization mode) {
  Image out = x;
  if (x.size() == 0) return out;
  for_each_group(mode, [&](std::size_t first, std::size_t stride) {
    const Range r = range_of(x, first, stride, eps);
    for (std::size_t i = first; i < x.size(); i += stride) out.data[i] = (x.data[i] - r.lo) / r.denom;
  });
  return out;
}

ImageLoss loss_hdr_constraint(const Image& rendered, const Image& target, double mu, double eps,
                              HdrNormalization mode, bool want_grad) {
  require_same_shape(rendered, target, "loss_hdr_constraint");
  ImageLoss out;
  const Image tn = mu_law(minmax_normalize(target, eps, mode), mu);
  const double inv_n = 1.0 / static_cast<double>(rendered.size());
  const double log1p_mu = std::log1p(mu);
  if (want_grad) out.grad = Image(rendered.width, rendered.height);
  double total = 0.0;
  for_each_group(mode, [&](std::size_t first, std::size_t stride) {
    const Range r = range_of(rendered, first, stride, eps);
    double sum_g = 0.0, sum_gn = 0.0;
    for (std::size_t i = first; i < rendered.size(); i += stride) {
      const double n = (rendered.data[i] - r.lo) / r.denom;
      const double d = std::log1p(mu * n) / log1p_mu - tn.data[i];
      total += d * d;
      if (!want_grad) continue;
      // dL/dn, then the direct 1/denom path; min/max paths are added below.
      const double g = 2.0 * d * inv_n * mu / ((1.0 + mu * n) * log1p_mu);
      out.grad.data[i] += g / r.denom;
      sum_g += g;
      sum_gn += g * n;
    }
    if (!want_grad) return;
    out.grad.data[r.argmin] -= sum_g / r.denom;
    if (!r.floored) {
      out.grad.data[r.argmin] += sum_gn / r.denom;
      out.grad.data[r.argmax] -= sum_gn / r.denom;
    }
  });
  out.value = total * inv_n;
  return out;
}

LossTotal loss_total(const DdrScene& scene, std::span<const ViewTarget> batch, const LossConfig& cfg,
                     const RasterConfig& raster, bool with_grad) {
  cfg.validate();
  if (batch.empty()) throw ConfigError("loss_total: empty batch");
  for (const auto& v : batch) {
    if (v.ldr == nullptr) throw ConfigError("loss_total: view '" + v.camera.id + "' has no LDR target");
    if (cfg.gamma_hdr > 0.0 && v.hdr == nullptr) {
      throw ConfigError("loss_total: gamma_hdr > 0 but view '" + v.camera.id + "' has no HDR target");
    }
  }
  LossTotal out;
  if (with_grad) out.grads = GradientSet::zeros_like(scene);
  for (const auto& v : batch) {
    ForwardPass fwd = render_forward(scene, v.camera, v.camera.exposure_time, raster);
    const ImageLoss lp = loss_photometric(fwd.images.ldr.pixels, *v.ldr, cfg.lambda_dssim, with_grad);
    out.photometric += lp.value;
    ImageLoss lc;
    const bool use_hdr = cfg.gamma_hdr > 0.0;
    if (use_hdr) {
      lc = loss_hdr_constraint(fwd.images.hdr.pixels, *v.hdr, cfg.mu, cfg.norm_epsilon, cfg.normalization, with_grad);
      out.hdr_constraint += lc.value;
    }
    if (with_grad) {
      Image up_hdr(v.camera.width, v.camera.height);
      if (use_hdr) {
        for (std::size_t i = 0; i < up_hdr.size(); ++i) up_hdr.data[i] = cfg.gamma_hdr * lc.grad.data[i];
      }
      ViewspaceStats stats;
      out.grads += render_backward(fwd, scene, up_hdr, lp.grad, &stats);
      out.stats.push_back(std::move(stats));
    }
    out.renders.push_back(std::move(fwd.images));
  }
  out.total = out.photometric + cfg.gamma_hdr * out.hdr_constraint;
  return out;
}

}  // namespace ddrgs
