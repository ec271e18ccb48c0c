#pragma once

#include "ddrgs/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <random>

namespace ddrgs {

/// One fc -> ReLU -> fc -> sigmoid head mapping a scalar to (0, 1).
///
/// The same struct doubles as the cotangent container for its own parameters
/// (see ToneMapper::zeros_like).
struct ChannelMlp {
  Eigen::VectorXd w1;  // hidden x 1
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // 1 x hidden, stored as a vector
  double b2 = 0.0;

  [[nodiscard]] int hidden_width() const { return static_cast<int>(w1.size()); }
  [[nodiscard]] std::size_t parameter_count() const { return 3 * w1.size() + 1; }

  [[nodiscard]] double forward(double x) const;

  /// Accumulates parameter cotangents into `grad` and returns d out / d x
  /// scaled by `upstream`.
  double backward(double x, double upstream, ChannelMlp& grad) const;

  /// Input cotangent only; skips the parameter accumulation.
  [[nodiscard]] double input_gradient(double x, double upstream) const;
};

/// Which quantity the MLP head sees. `log` is log c^h + log dt + b; `linear`
/// is the raw product c^h * dt (the CRF-domain ablation baseline).
enum class ToneDomain { log, linear };

/// Three parameter-disjoint per-channel heads shared by every Gaussian.
struct ToneMapper {
  std::array<ChannelMlp, 3> channels;

  /// fan-in uniform init for every layer, final-layer bias zero.
  static ToneMapper random(int hidden_width, std::mt19937_64& rng);
  static ToneMapper zeros(int hidden_width);

  [[nodiscard]] ToneMapper zeros_like() const { return zeros(hidden_width()); }
  [[nodiscard]] int hidden_width() const { return channels[0].hidden_width(); }
  [[nodiscard]] std::size_t parameter_count() const;

  /// Applies each channel head to the matching component of `input`.
  [[nodiscard]] Vec3 apply(const Vec3& input) const;
};

inline constexpr double kToneLogFloor = 1e-10;

/// LDR colour from linear HDR colour and exposure time, log domain.
/// Throws DomainError for non-positive colour components or exposure.
Vec3 tone_map(const ToneMapper& tm, const Vec3& hdr_color, double exposure_time, double sh_bias = 0.0);

/// Ablation head: the same MLPs fed hdr_color * exposure_time directly.
Vec3 tone_map_linear_variant(const ToneMapper& tm, const Vec3& hdr_color, double exposure_time);

struct ToneMapGrad {
  Vec3 input = Vec3::Zero();
  ToneMapper params;
};

/// Reverse-mode gradient of ToneMapper::apply at `input` for cotangent `upstream`.
ToneMapGrad tone_map_grad(const ToneMapper& tm, const Vec3& input, const Vec3& upstream);

double sigmoid(double x);
double logit(double p);

}  // namespace ddrgs
