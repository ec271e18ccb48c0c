#pragma once

#include "ddrgs/scene.hpp"

#include <vector>

namespace ddrgs {

/// Cotangents for every learnable scene parameter. The per-gaussian records
/// reuse DdrGaussian purely as a shape: `rotation` here is a gradient, not a
/// unit quaternion.
struct GradientSet {
  std::vector<DdrGaussian> gaussians;
  ToneMapper tone_mapper;
  double sh_bias = 0.0;

  static GradientSet zeros_like(const DdrScene& scene);

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double k);

  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double max_abs() const;
  [[nodiscard]] bool congruent_with(const DdrScene& scene) const;
};

}  // namespace ddrgs
