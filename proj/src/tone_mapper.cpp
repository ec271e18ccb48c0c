#include "ddrgs/tone_mapper.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddrgs {

namespace {

// Beyond this the sigmoid would round to exactly 0 or 1 in double precision.
constexpr double kSigmoidClamp = 36.0;

double hidden_sum(const ChannelMlp& m, double x) {
  double z = m.b2;
  for (Eigen::Index j = 0; j < m.w1.size(); ++j) {
    const double a = m.w1[j] * x + m.b1[j];
    if (a > 0.0) z += m.w2[j] * a;
  }
  return z;
}

}  // namespace

double sigmoid(double x) {
  const double z = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double ChannelMlp::forward(double x) const { return sigmoid(hidden_sum(*this, x)); }

double ChannelMlp::backward(double x, double upstream, ChannelMlp& grad) const {
  const double z = hidden_sum(*this, x);
  if (std::abs(z) >= kSigmoidClamp) return 0.0;
  const double s = sigmoid(z);
  const double dz = upstream * s * (1.0 - s);
  grad.b2 += dz;
  double dx = 0.0;
  for (Eigen::Index j = 0; j < w1.size(); ++j) {
    const double a = w1[j] * x + b1[j];
    if (a <= 0.0) continue;
    grad.w2[j] += dz * a;
    const double da = dz * w2[j];
    grad.w1[j] += da * x;
    grad.b1[j] += da;
    dx += da * w1[j];
  }
  return dx;
}

double ChannelMlp::input_gradient(double x, double upstream) const {
  const double z = hidden_sum(*this, x);
  if (std::abs(z) >= kSigmoidClamp) return 0.0;
  const double s = sigmoid(z);
  const double dz = upstream * s * (1.0 - s);
  double dx = 0.0;
  for (Eigen::Index j = 0; j < w1.size(); ++j) {
    if (w1[j] * x + b1[j] > 0.0) dx += dz * w2[j] * w1[j];
  }
  return dx;
}

ToneMapper ToneMapper::random(int hidden_width, std::mt19937_64& rng) {
  ToneMapper tm = zeros(hidden_width);
  // fan_in is 1 for the first layer and hidden_width for the second.
  std::uniform_real_distribution<double> first(-1.0, 1.0);
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_width));
  std::uniform_real_distribution<double> second(-bound2, bound2);
  for (auto& ch : tm.channels) {
    for (int j = 0; j < hidden_width; ++j) ch.w1[j] = first(rng);
    for (int j = 0; j < hidden_width; ++j) ch.b1[j] = first(rng);
    for (int j = 0; j < hidden_width; ++j) ch.w2[j] = second(rng);
    ch.b2 = 0.0;
  }
  return tm;
}

ToneMapper ToneMapper::zeros(int hidden_width) {
  ToneMapper tm;
  for (auto& ch : tm.channels) {
    ch.w1 = Eigen::VectorXd::Zero(hidden_width);
    ch.b1 = Eigen::VectorXd::Zero(hidden_width);
    ch.w2 = Eigen::VectorXd::Zero(hidden_width);
    ch.b2 = 0.0;
  }
  return tm;
}

std::size_t ToneMapper::parameter_count() const {
  std::size_t n = 0;
  for (const auto& ch : channels) n += ch.parameter_count();
  return n;
}

Vec3 ToneMapper::apply(const Vec3& input) const {
  return {channels[0].forward(input[0]), channels[1].forward(input[1]), channels[2].forward(input[2])};
}

Vec3 tone_map(const ToneMapper& tm, const Vec3& hdr_color, double exposure_time, double sh_bias) {
  if (!(exposure_time > 0.0)) {
    throw DomainError("tone_map: exposure_time must be > 0, got " + std::to_string(exposure_time));
  }
  Vec3 input;
  for (int c = 0; c < 3; ++c) {
    if (!(hdr_color[c] > 0.0)) {
      throw DomainError("tone_map: hdr colour channel " + std::to_string(c) + " must be > 0");
    }
    // log(c * dt) rather than log c + log dt: scaling c or dt by a power of
    // two then leaves the product, and so the output, bit-identical.
    input[c] = std::log(std::max(hdr_color[c] * exposure_time, kToneLogFloor)) + sh_bias;
  }
  return tm.apply(input);
}

Vec3 tone_map_linear_variant(const ToneMapper& tm, const Vec3& hdr_color, double exposure_time) {
  const Vec3 input = hdr_color * exposure_time;
  if (!input.allFinite()) throw DomainError("tone_map_linear_variant: non-finite input");
  return tm.apply(input);
}

ToneMapGrad tone_map_grad(const ToneMapper& tm, const Vec3& input, const Vec3& upstream) {
  ToneMapGrad g{Vec3::Zero(), tm.zeros_like()};
  for (int c = 0; c < 3; ++c) {
    g.input[c] = tm.channels[c].backward(input[c], upstream[c], g.params.channels[c]);
  }
  return g;
}

}  // namespace ddrgs
