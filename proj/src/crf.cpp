#include "ddrgs/crf.hpp"

#include "ddrgs/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ddrgs {

double gamma_crf(double x, double gamma) { return std::pow(std::clamp(x, 0.0, 1.0), 1.0 / gamma); }

namespace {

struct Sample {
  double input;   // what the MLP sees
  double target;
};

double mlp_input(double log_c, double log_t, ToneDomain d) {
  return d == ToneDomain::log ? log_c + log_t : std::exp(log_c + log_t);
}

// Nodes at (i + offset) / denom along each axis of the domain.
std::vector<Sample> grid_samples(const Crf& crf, const LogExposureDomain& dom, int n, double offset, double denom,
                                 ToneDomain d) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double lc = dom.log_radiance_min + (dom.log_radiance_max - dom.log_radiance_min) * (i + offset) / denom;
      const double lt = dom.log_time_min + (dom.log_time_max - dom.log_time_min) * (j + offset) / denom;
      out.push_back({mlp_input(lc, lt, d), crf(std::exp(lc + lt))});
    }
  }
  return out;
}

void flat_blocks(ToneMapper& tm, std::vector<std::span<double>>& out) {
  for (auto& ch : tm.channels) {
    out.emplace_back(ch.w1.data(), static_cast<std::size_t>(ch.w1.size()));
    out.emplace_back(ch.b1.data(), static_cast<std::size_t>(ch.b1.size()));
    out.emplace_back(ch.w2.data(), static_cast<std::size_t>(ch.w2.size()));
    out.emplace_back(&ch.b2, 1);
  }
}

}  // namespace

CrfFitResult fit_tone_mapper(ToneMapper& tm, const Crf& crf, const CrfFitOptions& opt) {
  // Training nodes include both ends of each axis.
  const auto samples = grid_samples(crf, opt.domain, opt.grid, 0.0, std::max(1, opt.grid - 1), opt.tone_domain);
  ToneMapper m = tm.zeros_like(), v = tm.zeros_like();
  std::vector<std::span<double>> pb, mb, vb, gb;
  flat_blocks(tm, pb);
  flat_blocks(m, mb);
  flat_blocks(v, vb);
  const double inv_n = 1.0 / (3.0 * static_cast<double>(samples.size()));
  CrfFitResult res;
  for (int it = 0; it <= opt.iterations; ++it) {
    ToneMapper grad = tm.zeros_like();
    double loss = 0.0, worst = 0.0;
    for (const auto& s : samples) {
      for (int c = 0; c < 3; ++c) {
        const double y = tm.channels[c].forward(s.input);
        const double d = y - s.target;
        loss += d * d;
        worst = std::max(worst, std::abs(d));
        // Cross-entropy against the soft target: its gradient with respect to the
        // sigmoid pre-activation is (y - t), which does not vanish as y -> 1 the
        // way the squared error's does. Both are minimised by y = t.
        const double up = opt.loss == CrfFitLoss::cross_entropy ? d / std::max(y * (1.0 - y), 1e-300) : 2.0 * d;
        tm.channels[c].backward(s.input, up * inv_n, grad.channels[c]);
      }
    }
    res.final_loss = loss * inv_n;
    res.train_max_error = worst;
    if (it == opt.iterations) break;
    gb.clear();
    flat_blocks(grad, gb);
    const double lr = lr_schedule(it, opt.lr_init, opt.lr_final, opt.iterations);
    for (std::size_t b = 0; b < pb.size(); ++b) adam_update(pb[b], gb[b], mb[b], vb[b], lr, it + 1, AdamConfig{});
  }
  return res;
}

double crf_max_error(const ToneMapper& tm, const Crf& crf, const LogExposureDomain& domain, int n, ToneDomain d) {
  double worst = 0.0;
  for (const auto& s : grid_samples(crf, domain, n, 0.5, n, d)) {
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(tm.channels[c].forward(s.input) - s.target));
  }
  return worst;
}

}  // namespace ddrgs
