#pragma once

// Scene builders and independent reference implementations shared by the
// unit and acceptance suites. Nothing here calls the code path it checks.

#include "ddrgs/rasterizer.hpp"
#include "ddrgs/scene.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace ddrgs::testing {

inline Camera make_camera(int width, int height, const Vec3& eye, const Vec3& target, double fov_deg = 50.0,
                          double exposure = 1.0) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  const double f = 0.5 * width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  cam.intrinsics = Camera::pinhole(f, f, 0.5 * width, 0.5 * height);
  cam.extrinsics = look_at(eye, target, Vec3(0.0, 1.0, 0.0));
  cam.exposure_time = exposure;
  cam.id = "test";
  return cam;
}

inline Vec4 random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec4 q(n(rng), n(rng), n(rng), n(rng));
  return q / q.norm();
}

struct SceneOptions {
  int n = 20;
  int sh_degree = 3;
  int hidden = 16;
  double extent = 1.0;           // positions uniform in [-extent, extent]^3
  double log_scale_lo = std::log(0.08);
  double log_scale_hi = std::log(0.25);
  double logit_lo = -1.5;
  double logit_hi = 1.5;
  double sh_sigma = 0.3;         // higher-order SH magnitude
};

inline DdrScene random_scene(std::mt19937_64& rng, const SceneOptions& o = {}) {
  DdrScene scene;
  scene.sh_degree = o.sh_degree;
  scene.tone_mapper = ToneMapper::random(o.hidden, rng);
  std::uniform_real_distribution<double> pos(-o.extent, o.extent);
  std::uniform_real_distribution<double> ls(o.log_scale_lo, o.log_scale_hi);
  std::uniform_real_distribution<double> op(o.logit_lo, o.logit_hi);
  std::uniform_real_distribution<double> dc(-1.0, 1.5);
  std::normal_distribution<double> hi(0.0, o.sh_sigma);
  for (int i = 0; i < o.n; ++i) {
    DdrGaussian g;
    g.position = {pos(rng), pos(rng), pos(rng)};
    g.rotation = random_unit_quaternion(rng);
    g.log_scale = {ls(rng), ls(rng), ls(rng)};
    g.opacity_logit = op(rng);
    g.sh_coeffs.assign(sh_coeff_count(o.sh_degree), Vec3::Zero());
    g.sh_coeffs[0] = {dc(rng), dc(rng), dc(rng)};
    for (std::size_t k = 1; k < g.sh_coeffs.size(); ++k) g.sh_coeffs[k] = {hi(rng), hi(rng), hi(rng)};
    scene.gaussians.push_back(std::move(g));
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Covariance oracle: Eigen's own quaternion expansion, dense products.
inline Mat3 covariance_oracle(const Vec4& wxyz, const Vec3& log_scale) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  q.normalize();
  const Mat3 r = q.toRotationMatrix();
  Mat3 s = Mat3::Zero();
  for (int i = 0; i < 3; ++i) s(i, i) = std::exp(log_scale[i]);
  return r * s * s.transpose() * r.transpose();
}

// ---------------------------------------------------------------------------
// Real spherical harmonics from associated Legendre polynomials in (theta, phi),
// Condon-Shortley phase included.
inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double assoc_legendre_cs(int l, int m, double x) {
  double pmm = 1.0;
  const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double fact = 1.0;
  for (int i = 1; i <= m; ++i) {
    pmm *= -fact * somx2;
    fact += 2.0;
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

inline double real_sh_oracle(int l, int m, const Vec3& dir) {
  const double theta = std::acos(std::clamp(dir.z(), -1.0, 1.0));
  const double phi = std::atan2(dir.y(), dir.x());
  const int am = std::abs(m);
  const double k = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * factorial(l - am) / factorial(l + am));
  const double p = assoc_legendre_cs(l, am, std::cos(theta));
  if (m > 0) return std::sqrt(2.0) * k * std::cos(am * phi) * p;
  if (m < 0) return std::sqrt(2.0) * k * std::sin(am * phi) * p;
  return k * p;
}

inline Vec3 eval_sh_oracle(const Vec3& dir, const std::vector<Vec3>& coeffs, int degree) {
  Vec3 out = Vec3::Zero();
  for (int l = 0; l <= degree; ++l) {
    for (int m = -l; m <= l; ++m) out += real_sh_oracle(l, m, dir) * coeffs[l * l + l + m];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection oracle: explicit homogeneous matrices and a numerically
// differentiated image-plane map.
struct ProjectionOracle {
  Vec2 center;
  Mat2 cov2d;  // with the low-pass floor
  double depth;
};

inline ProjectionOracle projection_oracle(const DdrGaussian& g, const Camera& cam, double low_pass) {
  Eigen::Vector4d mu_h(g.position.x(), g.position.y(), g.position.z(), 1.0);
  const Eigen::Vector4d v_h = cam.extrinsics * mu_h;
  const auto image_of = [&](const Vec3& v) {
    const Vec3 u_h = cam.intrinsics * Eigen::Vector4d(v.x(), v.y(), v.z(), 1.0);
    return Vec2(u_h.x() / u_h.z(), u_h.y() / u_h.z());
  };
  const Vec3 v = v_h.head<3>();
  Mat23 jac;
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 dp = v, dm = v;
    dp[k] += h;
    dm[k] -= h;
    jac.col(k) = (image_of(dp) - image_of(dm)) / (2.0 * h);
  }
  const Mat3 w = cam.extrinsics.topLeftCorner<3, 3>();
  Mat2 cov = jac * w * covariance_oracle(g.rotation, g.log_scale) * w.transpose() * jac.transpose();
  cov += low_pass * Mat2::Identity();
  return {image_of(v), cov, v.z()};
}

// ---------------------------------------------------------------------------
// Untiled, uncoulled blending: every projected splat, sorted by depth, tested
// at every pixel.
inline DualImage brute_force_render(const DdrScene& scene, const Camera& cam, double exposure,
                                    const RasterConfig& base = {}) {
  RasterConfig cfg = base;
  cfg.cull = false;
  struct Splat {
    ProjectedGaussian pg;
  };
  std::vector<ProjectedGaussian> splats;
  const int degree = cfg.active_sh_degree < 0 ? scene.sh_degree : std::min(cfg.active_sh_degree, scene.sh_degree);
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    auto pg = project_gaussian(scene.gaussians[i], cam, exposure, scene.tone_mapper, scene.sh_bias, degree, cfg);
    if (!pg) continue;
    pg->source_index = i;
    splats.push_back(*pg);
  }
  std::stable_sort(splats.begin(), splats.end(),
                   [](const auto& a, const auto& b) { return a.view_depth < b.view_depth; });
  DualImage out;
  out.hdr.pixels = Image(cam.width, cam.height);
  out.ldr.pixels = Image(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);
      double t = 1.0;
      Vec3 h = Vec3::Zero(), l = Vec3::Zero();
      for (const auto& s : splats) {
        const Vec2 d = p - s.pixel_center;
        const Mat2 inv = s.cov2d.inverse();
        const double sigma_raw = s.opacity * std::exp(-0.5 * d.dot(inv * d));
        if (sigma_raw < cfg.min_alpha) continue;
        const double sigma = std::min(cfg.max_alpha, sigma_raw);
        h += s.hdr_color * sigma * t;
        l += s.ldr_color * sigma * t;
        t *= 1.0 - sigma;
        if (t < cfg.min_transmittance) break;
      }
      for (int c = 0; c < 3; ++c) {
        out.hdr.pixels.at(x, y, c) = h[c] + t * scene.background[c];
        out.ldr.pixels.at(x, y, c) = l[c] + t * scene.background[c];
      }
    }
  }
  return out;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Central finite differences over every scalar parameter of a scene.
struct FdEntry {
  ParamClass cls;
  std::ptrdiff_t gaussian;
  std::size_t offset;
  double numeric;
};

inline std::vector<FdEntry> central_differences(const DdrScene& scene,
                                                const std::function<double(const DdrScene&)>& loss, double step) {
  std::vector<FdEntry> out;
  DdrScene work = scene;
  std::vector<std::tuple<ParamClass, std::ptrdiff_t, std::span<double>>> blocks;
  for_each_param_block(work, [&](ParamClass c, std::ptrdiff_t g, std::span<double> s) { blocks.emplace_back(c, g, s); });
  for (auto& [cls, g, span] : blocks) {
    for (std::size_t k = 0; k < span.size(); ++k) {
      const double orig = span[k];
      span[k] = orig + step;
      const double lp = loss(work);
      span[k] = orig - step;
      const double lm = loss(work);
      span[k] = orig;
      out.push_back({cls, g, k, (lp - lm) / (2.0 * step)});
    }
  }
  return out;
}

inline std::vector<double> flatten(const GradientSet& g) {
  std::vector<double> v;
  for_each_param_block(g, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) {
    v.insert(v.end(), s.begin(), s.end());
  });
  return v;
}

inline double image_sum(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Sliding-window SSIM with an explicit 2D window; pixels outside the image
// read as zero.
inline double ssim_oracle(const Image& a, const Image& b, double k1 = 0.01, double k2 = 0.03) {
  const int r = 5;
  double w2[11][11];
  double total_w = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) total_w += w2[i + r][j + r] = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
  const double c1 = k1 * k1, c2 = k2 * k2;
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = -r; i <= r; ++i) {
          for (int j = -r; j <= r; ++j) {
            const int xx = x + j, yy = y + i;
            if (xx < 0 || yy < 0 || xx >= a.width || yy >= a.height) continue;
            const double w = w2[i + r][j + r] / total_w;
            const double va = a.at(xx, yy, c), vb = b.at(xx, yy, c);
            mx += w * va;
            my += w * vb;
            sxx += w * va * va;
            syy += w * vb * vb;
            sxy += w * va * vb;
          }
        }
        sxx -= mx * mx;
        syy -= my * my;
        sxy -= mx * my;
        sum += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      }
    }
  }
  return sum / static_cast<double>(a.size());
}

inline Image random_image(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h);
  for (double& v : img.data) v = u(rng);
  return img;
}

}  // namespace ddrgs::testing
