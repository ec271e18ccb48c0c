#pragma once

#include "ddrgs/tone_mapper.hpp"
#include "ddrgs/types.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace ddrgs {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One Gaussian primitive. Opacity and scale live in logit / log space so
/// optimizer steps can never leave the valid range.
struct DdrGaussian {
  Vec3 position = Vec3::Zero();
  Vec4 rotation{1.0, 0.0, 0.0, 0.0};  // quaternion (w, x, y, z)
  Vec3 log_scale = Vec3::Zero();
  double opacity_logit = 0.0;
  std::vector<Vec3> sh_coeffs;  // log-HDR RGB per basis function, [0] is the DC term

  [[nodiscard]] double opacity() const;
  [[nodiscard]] Vec3 scale() const { return log_scale.array().exp(); }
};

struct DdrScene {
  std::vector<DdrGaussian> gaussians;
  ToneMapper tone_mapper;  // shared by every Gaussian
  int sh_degree = 3;
  double sh_bias = 0.0;
  bool sh_bias_learnable = false;
  Vec3 background = Vec3::Zero();

  [[nodiscard]] std::size_t size() const { return gaussians.size(); }

  /// Throws StructuralError / DomainError on any broken invariant.
  void validate(std::size_t max_gaussians = std::numeric_limits<std::size_t>::max()) const;
};

/// Pinhole camera. Extrinsics map world to camera (camera looks down +z,
/// y points down the image). Pixel (i, j) has its centre at (i + 0.5, j + 0.5).
struct Camera {
  Mat4 extrinsics = Mat4::Identity();
  Mat34 intrinsics = Mat34::Zero();
  int width = 0;
  int height = 0;
  double exposure_time = 1.0;
  std::string id;

  static Mat34 pinhole(double fx, double fy, double cx, double cy);

  [[nodiscard]] double fx() const { return intrinsics(0, 0); }
  [[nodiscard]] double fy() const { return intrinsics(1, 1); }
  [[nodiscard]] double cx() const { return intrinsics(0, 2); }
  [[nodiscard]] double cy() const { return intrinsics(1, 2); }
  [[nodiscard]] Mat3 rotation() const { return extrinsics.topLeftCorner<3, 3>(); }
  [[nodiscard]] Vec3 translation() const { return extrinsics.topRightCorner<3, 1>(); }
  /// Optical centre in world coordinates.
  [[nodiscard]] Vec3 position() const { return -rotation().transpose() * translation(); }

  void validate() const;
};

/// Builds a world-to-camera matrix for a camera at `eye` looking at `target`.
/// `up` is the approximate world up; the camera's y axis points opposite to it.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

Mat3 quaternion_to_rotation(const Vec4& q);
Vec4 normalize_quaternion(const Vec4& q);

/// R diag(exp(log_scale))^2 R^T. The quaternion is normalized internally.
Mat3 build_covariance(const Vec4& rotation, const Vec3& log_scale);

/// Pulls dL/dSigma (full 3x3 cotangent) back onto the raw quaternion and log scale.
void build_covariance_backward(const Vec4& rotation, const Vec3& log_scale, const Mat3& d_cov, Vec4& d_rotation,
                               Vec3& d_log_scale);

/// Real SH basis values Y_l^m(dir), ordered by l^2 + l + m. `dir` must be unit.
std::array<double, kMaxShCoeffs> sh_basis(const Vec3& dir, int degree);

/// d Y / d dir for each basis function (dir treated as a free 3-vector).
std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(const Vec3& dir, int degree);

/// sum_{l,m} k_l^m Y_l^m(dir) per channel: the log of the HDR colour.
Vec3 eval_sh(const Vec3& direction, std::span<const Vec3> sh_coeffs, int degree);

/// exp(eval_sh(...)), strictly positive.
Vec3 hdr_color(const Vec3& direction, std::span<const Vec3> sh_coeffs, int degree);

/// Learnable parameter families, in the order they are visited.
enum class ParamClass { position, rotation, log_scale, opacity, sh, tone_mapper, sh_bias };
inline constexpr std::array kAllParamClasses = {ParamClass::position, ParamClass::rotation, ParamClass::log_scale,
                                                ParamClass::opacity,  ParamClass::sh,       ParamClass::tone_mapper,
                                                ParamClass::sh_bias};
std::string_view to_string(ParamClass c);

/// Visits every learnable block of a scene-shaped object (DdrScene or
/// GradientSet) as (class, index of the owning gaussian or -1, span).
/// Scenes and gradient sets with equal shapes visit identical sequences.
template <class Params, class Fn>
void for_each_param_block(Params& p, Fn&& fn) {
  using Scalar = std::conditional_t<std::is_const_v<Params>, const double, double>;
  for (std::size_t i = 0; i < p.gaussians.size(); ++i) {
    auto& g = p.gaussians[i];
    const auto idx = static_cast<std::ptrdiff_t>(i);
    fn(ParamClass::position, idx, std::span<Scalar>(g.position.data(), 3));
    fn(ParamClass::rotation, idx, std::span<Scalar>(g.rotation.data(), 4));
    fn(ParamClass::log_scale, idx, std::span<Scalar>(g.log_scale.data(), 3));
    fn(ParamClass::opacity, idx, std::span<Scalar>(&g.opacity_logit, 1));
    if (!g.sh_coeffs.empty()) {
      fn(ParamClass::sh, idx, std::span<Scalar>(g.sh_coeffs.front().data(), 3 * g.sh_coeffs.size()));
    }
  }
  for (auto& ch : p.tone_mapper.channels) {
    const auto h = static_cast<std::size_t>(ch.w1.size());
    fn(ParamClass::tone_mapper, -1, std::span<Scalar>(ch.w1.data(), h));
    fn(ParamClass::tone_mapper, -1, std::span<Scalar>(ch.b1.data(), h));
    fn(ParamClass::tone_mapper, -1, std::span<Scalar>(ch.w2.data(), h));
    fn(ParamClass::tone_mapper, -1, std::span<Scalar>(&ch.b2, 1));
  }
  fn(ParamClass::sh_bias, -1, std::span<Scalar>(&p.sh_bias, 1));
}

}  // namespace ddrgs
