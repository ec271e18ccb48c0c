#include "ddrgs/gradient_set.hpp"

#include <algorithm>
#include <cmath>

namespace ddrgs {

GradientSet GradientSet::zeros_like(const DdrScene& scene) {
  GradientSet g;
  g.gaussians.resize(scene.gaussians.size());
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    auto& d = g.gaussians[i];
    d.rotation = Vec4::Zero();
    d.sh_coeffs.assign(scene.gaussians[i].sh_coeffs.size(), Vec3::Zero());
  }
  g.tone_mapper = scene.tone_mapper.zeros_like();
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  std::vector<std::span<const double>> rhs;
  for_each_param_block(other, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) { rhs.push_back(s); });
  std::size_t k = 0;
  for_each_param_block(*this, [&](ParamClass, std::ptrdiff_t, std::span<double> s) {
    const auto& o = rhs.at(k++);
    if (o.size() != s.size()) throw StructuralError("GradientSet += : shape mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += o[i];
  });
  if (k != rhs.size()) throw StructuralError("GradientSet += : shape mismatch");
  return *this;
}

GradientSet& GradientSet::operator*=(double k) {
  for_each_param_block(*this, [&](ParamClass, std::ptrdiff_t, std::span<double> s) {
    for (double& v : s) v *= k;
  });
  return *this;
}

bool GradientSet::all_finite() const {
  bool ok = true;
  for_each_param_block(*this, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) {
    for (double v : s) ok = ok && std::isfinite(v);
  });
  return ok;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for_each_param_block(*this, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) {
    for (double v : s) m = std::max(m, std::abs(v));
  });
  return m;
}

bool GradientSet::congruent_with(const DdrScene& scene) const {
  if (gaussians.size() != scene.gaussians.size()) return false;
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    if (gaussians[i].sh_coeffs.size() != scene.gaussians[i].sh_coeffs.size()) return false;
  }
  return tone_mapper.hidden_width() == scene.tone_mapper.hidden_width();
}

}  // namespace ddrgs
