#include "ddrgs/scene.hpp"

#include <string>

namespace ddrgs {

namespace {

// Real SH normalization constants (with the Condon-Shortley phase folded in).
constexpr double kC0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))
constexpr double kC1 = 0.4886025119029199;   // sqrt(3 / (4 pi))
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277,  -0.5900435899266435};

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxShDegree) {
    throw StructuralError("SH degree must be in [0, 3], got " + std::to_string(degree));
  }
}

}  // namespace

std::array<double, kMaxShCoeffs> sh_basis(const Vec3& dir, int degree) {
  check_degree(degree);
  std::array<double, kMaxShCoeffs> y{};
  y[0] = kC0;
  if (degree < 1) return y;
  const double x = dir[0], yy_ = dir[1], z = dir[2];
  y[1] = -kC1 * yy_;
  y[2] = kC1 * z;
  y[3] = -kC1 * x;
  if (degree < 2) return y;
  const double xx = x * x, yy = yy_ * yy_, zz = z * z;
  const double xy = x * yy_, yz = yy_ * z, xz = x * z;
  y[4] = kC2[0] * xy;
  y[5] = kC2[1] * yz;
  y[6] = kC2[2] * (2.0 * zz - xx - yy);
  y[7] = kC2[3] * xz;
  y[8] = kC2[4] * (xx - yy);
  if (degree < 3) return y;
  y[9] = kC3[0] * yy_ * (3.0 * xx - yy);
  y[10] = kC3[1] * xy * z;
  y[11] = kC3[2] * yy_ * (4.0 * zz - xx - yy);
  y[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  y[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  y[14] = kC3[5] * z * (xx - yy);
  y[15] = kC3[6] * x * (xx - 3.0 * yy);
  return y;
}

std::array<Vec3, kMaxShCoeffs> sh_basis_gradient(const Vec3& dir, int degree) {
  check_degree(degree);
  std::array<Vec3, kMaxShCoeffs> g;
  g.fill(Vec3::Zero());
  if (degree < 1) return g;
  const double x = dir[0], y = dir[1], z = dir[2];
  g[1] = {0.0, -kC1, 0.0};
  g[2] = {0.0, 0.0, kC1};
  g[3] = {-kC1, 0.0, 0.0};
  if (degree < 2) return g;
  const double xx = x * x, yy = y * y, zz = z * z;
  g[4] = {kC2[0] * y, kC2[0] * x, 0.0};
  g[5] = {0.0, kC2[1] * z, kC2[1] * y};
  g[6] = {-2.0 * kC2[2] * x, -2.0 * kC2[2] * y, 4.0 * kC2[2] * z};
  g[7] = {kC2[3] * z, 0.0, kC2[3] * x};
  g[8] = {2.0 * kC2[4] * x, -2.0 * kC2[4] * y, 0.0};
  if (degree < 3) return g;
  g[9] = {6.0 * kC3[0] * x * y, kC3[0] * (3.0 * xx - 3.0 * yy), 0.0};
  g[10] = {kC3[1] * y * z, kC3[1] * x * z, kC3[1] * x * y};
  g[11] = {-2.0 * kC3[2] * x * y, kC3[2] * (4.0 * zz - xx - 3.0 * yy), 8.0 * kC3[2] * y * z};
  g[12] = {-6.0 * kC3[3] * x * z, -6.0 * kC3[3] * y * z, kC3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)};
  g[13] = {kC3[4] * (4.0 * zz - 3.0 * xx - yy), -2.0 * kC3[4] * x * y, 8.0 * kC3[4] * x * z};
  g[14] = {2.0 * kC3[5] * x * z, -2.0 * kC3[5] * y * z, kC3[5] * (xx - yy)};
  g[15] = {kC3[6] * (3.0 * xx - 3.0 * yy), -6.0 * kC3[6] * x * y, 0.0};
  return g;
}

Vec3 eval_sh(const Vec3& direction, std::span<const Vec3> sh_coeffs, int degree) {
  check_degree(degree);
  const auto n = static_cast<std::size_t>(sh_coeff_count(degree));
  if (sh_coeffs.size() != n) {
    throw StructuralError("eval_sh: degree " + std::to_string(degree) + " needs " + std::to_string(n) +
                          " coefficients, got " + std::to_string(sh_coeffs.size()));
  }
  const auto basis = sh_basis(direction, degree);
  Vec3 out = Vec3::Zero();
  for (std::size_t k = 0; k < n; ++k) out += basis[k] * sh_coeffs[k];
  return out;
}

Vec3 hdr_color(const Vec3& direction, std::span<const Vec3> sh_coeffs, int degree) {
  return eval_sh(direction, sh_coeffs, degree).array().exp();
}

}  // namespace ddrgs
