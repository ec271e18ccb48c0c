#include "ddrgs/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ddrgs {

void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v, double lr,
                 long step, const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

AdamState AdamState::for_scene(const DdrScene& scene) {
  return {GradientSet::zeros_like(scene), GradientSet::zeros_like(scene), 0};
}

void adam_step(DdrScene& scene, const GradientSet& grads, AdamState& state, const LearningRates& lr,
               const AdamConfig& cfg, long iteration) {
  if (!grads.congruent_with(scene) || !state.m.congruent_with(scene) || !state.v.congruent_with(scene)) {
    throw StructuralError("adam_step: scene, gradient and moment shapes differ");
  }
  struct Block {
    ParamClass cls;
    std::ptrdiff_t g;
    std::span<double> p;
  };
  std::vector<Block> params;
  for_each_param_block(scene, [&](ParamClass c, std::ptrdiff_t g, std::span<double> s) { params.push_back({c, g, s}); });
  std::vector<std::span<const double>> gs;
  for_each_param_block(grads, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) { gs.push_back(s); });
  std::vector<std::span<double>> ms, vs;
  for_each_param_block(state.m, [&](ParamClass, std::ptrdiff_t, std::span<double> s) { ms.push_back(s); });
  for_each_param_block(state.v, [&](ParamClass, std::ptrdiff_t, std::span<double> s) { vs.push_back(s); });

  for (std::size_t b = 0; b < params.size(); ++b) {
    for (double x : gs[b]) {
      if (!std::isfinite(x)) {
        throw NumericalError("non-finite gradient in parameter class '" + std::string(to_string(params[b].cls)) +
                             "'" + (params[b].g >= 0 ? " (gaussian " + std::to_string(params[b].g) + ")" : "") +
                             " at iteration " + std::to_string(iteration));
      }
    }
  }
  ++state.step;
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].cls == ParamClass::sh_bias && !scene.sh_bias_learnable) continue;
    adam_update(params[b].p, gs[b], ms[b], vs[b], lr[params[b].cls], state.step, cfg);
  }
  for (auto& g : scene.gaussians) g.rotation = normalize_quaternion(g.rotation);
}

double lr_schedule(long iter, double lr_init, double lr_final, long total_iters) {
  if (total_iters <= 0 || iter <= 0) return lr_init;
  if (iter >= total_iters) return lr_final;
  const double t = static_cast<double>(iter) / static_cast<double>(total_iters);
  return lr_init * std::pow(lr_final / lr_init, t);
}

}  // namespace ddrgs
