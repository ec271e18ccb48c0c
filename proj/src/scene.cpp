#include "ddrgs/scene.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <string>

namespace ddrgs {

double DdrGaussian::opacity() const { return sigmoid(opacity_logit); }

void DdrScene::validate(std::size_t max_gaussians) const {
  if (sh_degree < 0 || sh_degree > kMaxShDegree) {
    throw StructuralError("scene: sh_degree must be in [0, 3], got " + std::to_string(sh_degree));
  }
  if (gaussians.size() > max_gaussians) {
    throw StructuralError("scene: " + std::to_string(gaussians.size()) + " gaussians exceeds cap " +
                          std::to_string(max_gaussians));
  }
  const auto expected = static_cast<std::size_t>(sh_coeff_count(sh_degree));
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& g = gaussians[i];
    const auto where = "scene: gaussian " + std::to_string(i);
    if (g.sh_coeffs.size() != expected) {
      throw StructuralError(where + " has " + std::to_string(g.sh_coeffs.size()) + " SH coefficients, expected " +
                            std::to_string(expected));
    }
    if (!g.position.allFinite() || !g.rotation.allFinite() || !g.log_scale.allFinite() ||
        !std::isfinite(g.opacity_logit)) {
      throw DomainError(where + " has non-finite geometry");
    }
    if (std::abs(g.rotation.norm() - 1.0) > 1e-6) throw DomainError(where + " rotation is not unit length");
    for (const auto& k : g.sh_coeffs) {
      if (!k.allFinite()) throw DomainError(where + " has non-finite SH coefficients");
    }
  }
  const int h = tone_mapper.hidden_width();
  for (const auto& ch : tone_mapper.channels) {
    if (ch.w1.size() != h || ch.b1.size() != h || ch.w2.size() != h) {
      throw StructuralError("scene: tone-mapper channel shapes disagree");
    }
  }
  if (!background.allFinite() || (background.array() < 0.0).any() || (background.array() > 1.0).any()) {
    throw DomainError("scene: background colour must lie in [0, 1]");
  }
}

Mat34 Camera::pinhole(double fx, double fy, double cx, double cy) {
  Mat34 k = Mat34::Zero();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  k(2, 2) = 1.0;
  return k;
}

void Camera::validate() const {
  const auto where = std::string("camera '") + id + "'";
  if (!extrinsics.allFinite() || !intrinsics.allFinite()) throw DomainError(where + ": non-finite matrix");
  const Mat3 r = rotation();
  if (!(r * r.transpose()).isApprox(Mat3::Identity(), 1e-6) ||
      ((r * r.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw DomainError(where + ": extrinsic rotation is not orthonormal");
  }
  if (std::abs(r.determinant() - 1.0) > 1e-6) throw DomainError(where + ": extrinsic rotation has det != +1");
  if (extrinsics.row(3).cwiseAbs().head<3>().maxCoeff() > 0.0 || extrinsics(3, 3) != 1.0) {
    throw DomainError(where + ": extrinsics last row must be (0, 0, 0, 1)");
  }
  if (!(fx() > 0.0) || !(fy() > 0.0)) throw DomainError(where + ": focal lengths must be > 0");
  if (intrinsics(0, 1) != 0.0 || intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 ||
      intrinsics(2, 2) != 1.0 || intrinsics.col(3).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError(where + ": intrinsics must be a zero-skew pinhole [K | 0]");
  }
  if (width <= 0 || height <= 0) throw DomainError(where + ": image size must be positive");
  if (!(exposure_time > 0.0) || !std::isfinite(exposure_time)) {
    throw DomainError(where + ": exposure_time must be finite and > 0");
  }
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(-up);
  if (x.norm() < 1e-12) x = z.unitOrthogonal();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = -r * eye;
  return m;
}

Vec4 normalize_quaternion(const Vec4& q) { return q / q.norm(); }

Mat3 quaternion_to_rotation(const Vec4& q_raw) {
  const Vec4 q = normalize_quaternion(q_raw);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),  //
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),    //
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Mat3 build_covariance(const Vec4& rotation, const Vec3& log_scale) {
  const Mat3 m = quaternion_to_rotation(rotation) * log_scale.array().exp().matrix().asDiagonal();
  Mat3 cov = m * m.transpose();
  // Bit-exact symmetry.
  cov(1, 0) = cov(0, 1);
  cov(2, 0) = cov(0, 2);
  cov(2, 1) = cov(1, 2);
  return cov;
}

void build_covariance_backward(const Vec4& rotation, const Vec3& log_scale, const Mat3& d_cov, Vec4& d_rotation,
                               Vec3& d_log_scale) {
  const Vec4 q = normalize_quaternion(rotation);
  const Mat3 r = quaternion_to_rotation(q);
  const Vec3 s = log_scale.array().exp();
  const Mat3 m = r * s.asDiagonal();
  const Mat3 dm = (d_cov + d_cov.transpose()) * m;

  // M = R S: dS_i = (R^T dM)_ii, dR = dM S.
  const Mat3 rt_dm = r.transpose() * dm;
  for (int i = 0; i < 3; ++i) d_log_scale[i] = rt_dm(i, i) * s[i];
  const Mat3 g = dm * s.asDiagonal();

  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 dqn;
  dqn[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  dqn[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) +
                  w * g(2, 1) - 2.0 * x * g(2, 2));
  dqn[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) +
                  z * g(2, 1) - 2.0 * y * g(2, 2));
  dqn[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) + y * g(1, 2) +
                  x * g(2, 0) + y * g(2, 1));

  // Through q / |q|.
  const double n = rotation.norm();
  d_rotation = (dqn - q * q.dot(dqn)) / n;
}

std::string_view to_string(ParamClass c) {
  switch (c) {
    case ParamClass::position: return "position";
    case ParamClass::rotation: return "rotation";
    case ParamClass::log_scale: return "log_scale";
    case ParamClass::opacity: return "opacity_logit";
    case ParamClass::sh: return "sh_coeffs";
    case ParamClass::tone_mapper: return "tone_mapper";
    case ParamClass::sh_bias: return "sh_bias";
  }
  return "unknown";
}

}  // namespace ddrgs
