#pragma once

#include "ddrgs/gradient_set.hpp"

#include <array>
#include <span>

namespace ddrgs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// One bias-corrected Adam update of a flat parameter block; `step` is 1-based.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 double lr, long step, const AdamConfig& cfg);

/// Learning rate per parameter class.
struct LearningRates {
  std::array<double, kAllParamClasses.size()> values{};

  double& operator[](ParamClass c) { return values[static_cast<std::size_t>(c)]; }
  double operator[](ParamClass c) const { return values[static_cast<std::size_t>(c)]; }
};

/// First and second moments, shaped like the scene.
struct AdamState {
  GradientSet m;
  GradientSet v;
  long step = 0;

  static AdamState for_scene(const DdrScene& scene);
};

/// Bias-corrected Adam over every learnable block, then quaternion renormalization.
/// A non-finite gradient aborts with a NumericalError naming the class and iteration.
void adam_step(DdrScene& scene, const GradientSet& grads, AdamState& state, const LearningRates& lr,
               const AdamConfig& cfg = {}, long iteration = -1);

/// lr_init * (lr_final / lr_init)^(iter / total), clamped to the run.
double lr_schedule(long iter, double lr_init, double lr_final, long total_iters);

}  // namespace ddrgs
