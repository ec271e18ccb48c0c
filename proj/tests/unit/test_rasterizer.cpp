#include "ddrgs/parallel.hpp"
#include "ddrgs/rasterizer.hpp"

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <cstring>
#include <random>

using namespace ddrgs;
using namespace ddrgs::testing;

namespace {

Camera front_camera(int size = 32) { return make_camera(size, size, Vec3(0.0, 0.0, -4.0), Vec3::Zero(), 50.0); }

DdrGaussian isotropic(const Vec3& pos, double sigma, double alpha, const Vec3& log_color) {
  DdrGaussian g;
  g.position = pos;
  g.log_scale = Vec3::Constant(std::log(sigma));
  g.opacity_logit = logit(alpha);
  g.sh_coeffs = {log_color * (2.0 * std::sqrt(std::numbers::pi))};
  return g;
}

}  // namespace

TEST(GaussianDensity, Examples) {
  EXPECT_EQ(gaussian_density(Vec3(1, 2, 3), Vec3(1, 2, 3), Mat3::Identity()), 1.0);
  EXPECT_NEAR(gaussian_density(Vec3(1, 0, 0), Vec3::Zero(), Mat3::Identity()), 0.6065306597126334, 1e-15);
}

TEST(GaussianDensity, MatchesDenseSolveOracle) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Mat3 a;
    for (int k = 0; k < 9; ++k) a.data()[k] = n(rng);
    const Mat3 cov = a * a.transpose() + 0.1 * Mat3::Identity();
    const Vec3 mu(n(rng), n(rng), n(rng)), x(n(rng), n(rng), n(rng));
    const Vec3 d = x - mu;
    const double oracle = std::exp(-0.5 * d.dot(cov.partialPivLu().solve(d)));
    EXPECT_NEAR(gaussian_density(x, mu, cov), oracle, 1e-12);
  }
}

TEST(GaussianDensity, SingularCovarianceIsDiagnosed) {
  Mat3 cov = Mat3::Zero();
  cov(0, 0) = 1.0;
  EXPECT_THROW(gaussian_density(Vec3::Zero(), Vec3::Ones(), cov), NumericalError);
}

TEST(ProjectGaussian, OnAxisPointLandsOnPrincipalPoint) {
  Camera cam;
  cam.width = 40;
  cam.height = 30;
  cam.intrinsics = Camera::pinhole(50.0, 60.0, 17.0, 13.0);
  std::mt19937_64 rng(0);
  const ToneMapper tm = ToneMapper::random(4, rng);
  const auto pg = project_gaussian(isotropic(Vec3(0, 0, 5), 0.2, 0.5, Vec3::Zero()), cam, 1.0, tm, 0.0, 0);
  ASSERT_TRUE(pg.has_value());
  EXPECT_NEAR(pg->pixel_center.x(), 17.0, 1e-12);
  EXPECT_NEAR(pg->pixel_center.y(), 13.0, 1e-12);
  EXPECT_NEAR(pg->view_depth, 5.0, 1e-12);
}

TEST(ProjectGaussian, IsotropicOnAxisCovariance) {
  Camera cam;
  cam.width = cam.height = 64;
  const double f = 80.0, sigma = 0.3, z = 6.0;
  cam.intrinsics = Camera::pinhole(f, f, 32.0, 32.0);
  std::mt19937_64 rng(0);
  const ToneMapper tm = ToneMapper::random(4, rng);
  RasterConfig cfg;
  const auto pg = project_gaussian(isotropic(Vec3(0, 0, z), sigma, 0.5, Vec3::Zero()), cam, 1.0, tm, 0.0, 0, cfg);
  ASSERT_TRUE(pg.has_value());
  const double expected = (f * sigma / z) * (f * sigma / z);
  const Mat2 before_floor = pg->cov2d - cfg.low_pass * Mat2::Identity();
  EXPECT_NEAR(before_floor(0, 0), expected, 1e-12);
  EXPECT_NEAR(before_floor(1, 1), expected, 1e-12);
  EXPECT_NEAR(before_floor(0, 1), 0.0, 1e-12);
  EXPECT_GE(pg->cov2d.eigenvalues().real().minCoeff(), cfg.low_pass - 1e-12);
}

TEST(ProjectGaussian, MatchesHomogeneousOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  DdrScene scene = random_scene(rng, {.n = 50, .sh_degree = 1});
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 eye = Vec3(n(rng), n(rng), n(rng)).normalized() * 5.0;
    Camera cam = make_camera(48, 40, eye, Vec3(0.1 * n(rng), 0.1 * n(rng), 0.0), 55.0);
    RasterConfig cfg;
    cfg.cull = false;
    for (const auto& g : scene.gaussians) {
      const auto pg = project_gaussian(g, cam, 1.0, scene.tone_mapper, 0.0, 1, cfg);
      ASSERT_TRUE(pg.has_value());
      const auto o = projection_oracle(g, cam, cfg.low_pass);
      EXPECT_LT((pg->pixel_center - o.center).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LT((pg->cov2d - o.cov2d).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_NEAR(pg->view_depth, o.depth, 1e-9);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 500);
}

TEST(ProjectGaussian, CullsBehindCameraAndOffscreen) {
  std::mt19937_64 rng(0);
  const ToneMapper tm = ToneMapper::random(4, rng);
  const Camera cam = front_camera();
  EXPECT_FALSE(project_gaussian(isotropic(Vec3(0, 0, -5), 0.1, 0.5, Vec3::Zero()), cam, 1.0, tm, 0, 0));
  EXPECT_FALSE(project_gaussian(isotropic(Vec3(30, 0, 0), 0.1, 0.5, Vec3::Zero()), cam, 1.0, tm, 0, 0));
  EXPECT_TRUE(project_gaussian(isotropic(Vec3(0, 0, 0), 0.1, 0.5, Vec3::Zero()), cam, 1.0, tm, 0, 0));
}

TEST(RasterizeDual, EmptySceneIsBackground) {
  DdrScene scene;
  scene.sh_degree = 0;
  scene.tone_mapper = ToneMapper::zeros(4);
  scene.background = Vec3(0.2, 0.4, 0.6);
  const auto out = rasterize_dual(scene, front_camera(), 1.0);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(out.hdr.pixels.at(5, 7, c), scene.background[c]);
    EXPECT_EQ(out.ldr.pixels.at(31, 0, c), scene.background[c]);
  }
  EXPECT_EQ(out.hdr.range, DynamicRange::hdr);
  EXPECT_EQ(out.ldr.range, DynamicRange::ldr);
  EXPECT_FALSE(out.hdr.exposure_time.has_value());
  EXPECT_EQ(out.ldr.exposure_time.value(), 1.0);
}

TEST(RasterizeDual, SingleSplatAtPixelCentre) {
  // Camera at origin looking down +z; principal point on a pixel centre.
  Camera cam;
  cam.width = cam.height = 16;
  cam.intrinsics = Camera::pinhole(20.0, 20.0, 8.5, 8.5);
  DdrScene scene;
  scene.sh_degree = 0;
  std::mt19937_64 rng(3);
  scene.tone_mapper = ToneMapper::random(8, rng);
  scene.gaussians.push_back(isotropic(Vec3(0, 0, 4), 0.05, 0.5, Vec3(std::log(3.0), 0.0, std::log(0.25))));
  const auto out = rasterize_dual(scene, cam, 2.0);
  const Vec3 c_h(3.0, 1.0, 0.25);
  const Vec3 c_l = tone_map(scene.tone_mapper, c_h, 2.0);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(out.hdr.pixels.at(8, 8, c), 0.5 * c_h[c], 1e-12);
    EXPECT_NEAR(out.ldr.pixels.at(8, 8, c), 0.5 * c_l[c], 1e-12);
  }
}

TEST(RasterizeDual, MatchesBruteForceOracle) {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    DdrScene scene = random_scene(rng, {.n = 50, .sh_degree = 3});
    scene.background = Vec3(0.1, 0.0, 0.3);
    const Camera cam = front_camera();
    const auto tiled = rasterize_dual(scene, cam, 0.7);
    const auto oracle = brute_force_render(scene, cam, 0.7);
    worst = std::max({worst, max_abs_diff(tiled.hdr.pixels, oracle.hdr.pixels),
                      max_abs_diff(tiled.ldr.pixels, oracle.ldr.pixels)});
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(RasterizeDual, TileSizeDoesNotChangeTheImage) {
  std::mt19937_64 rng(5);
  DdrScene scene = random_scene(rng, {.n = 60});
  const Camera cam = make_camera(40, 36, Vec3(1.0, -0.5, -4.0), Vec3::Zero());
  RasterConfig a, b, whole;
  b.tile_size = 32;
  whole.tile_size = 64;
  const auto ra = rasterize_dual(scene, cam, 1.5, a);
  const auto rb = rasterize_dual(scene, cam, 1.5, b);
  const auto rw = rasterize_dual(scene, cam, 1.5, whole);
  EXPECT_LT(max_abs_diff(ra.hdr.pixels, rb.hdr.pixels), 1e-6);
  EXPECT_LT(max_abs_diff(ra.ldr.pixels, rw.ldr.pixels), 1e-6);
  EXPECT_LT(max_abs_diff(ra.hdr.pixels, rw.hdr.pixels), 1e-6);
}

TEST(RasterizeDual, CullingIsSound) {
  std::mt19937_64 rng(6);
  DdrScene scene = random_scene(rng, {.n = 80, .extent = 2.0});
  const Camera cam = front_camera();
  RasterConfig off;
  off.cull = false;
  const auto culled = rasterize_dual(scene, cam, 1.0);
  const auto full = rasterize_dual(scene, cam, 1.0, off);
  EXPECT_LT(max_abs_diff(culled.hdr.pixels, full.hdr.pixels), 1e-4);
  EXPECT_LT(max_abs_diff(culled.ldr.pixels, full.ldr.pixels), 1e-4);
}

TEST(RasterizeDual, TransmittanceIsConserved) {
  std::mt19937_64 rng(7);
  SceneOptions o;
  o.n = 70;
  o.sh_degree = 0;
  o.logit_hi = 4.0;
  DdrScene scene = random_scene(rng, o);
  for (auto& g : scene.gaussians) g.sh_coeffs[0].setZero();  // unit HDR colour
  scene.background = Vec3::Ones();
  const auto out = rasterize_dual(scene, front_camera(), 1.0);
  for (double v : out.hdr.pixels.data) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(RasterizeDual, RangesHold) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    SceneOptions o;
    o.logit_hi = 6.0;
    DdrScene scene = random_scene(rng, o);
    scene.background = Vec3(1.0, 0.5, 0.0);
    const auto out = rasterize_dual(scene, front_camera(), 40.0);
    for (double v : out.ldr.pixels.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (double v : out.hdr.pixels.data) EXPECT_GE(v, 0.0);
  }
}

TEST(RasterizeDual, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(9);
  DdrScene scene = random_scene(rng, {.n = 100});
  const Camera cam = front_camera(48);
  Image up_h(48, 48), up_l(48, 48);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : up_h.data) v = n(rng);
  for (auto& v : up_l.data) v = n(rng);
  set_num_threads(1);
  const auto a = rasterize_dual(scene, cam, 2.0);
  const auto ga = flatten(rasterize_dual_backward(scene, cam, 2.0, up_h, up_l));
  set_num_threads(4);
  const auto b = rasterize_dual(scene, cam, 2.0);
  const auto gb = flatten(rasterize_dual_backward(scene, cam, 2.0, up_h, up_l));
  set_num_threads(1);
  EXPECT_EQ(a.hdr.pixels.data, b.hdr.pixels.data);
  EXPECT_EQ(a.ldr.pixels.data, b.ldr.pixels.data);
  EXPECT_EQ(ga, gb);
}

TEST(RasterizeDualBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(10);
  DdrScene scene = random_scene(rng, {.n = 10});
  const Camera cam = front_camera();
  const Image zero(32, 32);
  const auto g = rasterize_dual_backward(scene, cam, 1.0, zero, zero);
  EXPECT_EQ(g.max_abs(), 0.0);
  EXPECT_TRUE(g.congruent_with(scene));
}

TEST(RasterizeDualBackward, HdrOnlyUpstreamLeavesToneMapperUntouched) {
  std::mt19937_64 rng(11);
  DdrScene scene = random_scene(rng, {.n = 15});
  const Camera cam = front_camera();
  const Image ones(32, 32, 1.0), zero(32, 32);
  const auto g = rasterize_dual_backward(scene, cam, 1.0, ones, zero);
  EXPECT_GT(g.max_abs(), 0.0);
  for (const auto& ch : g.tone_mapper.channels) {
    EXPECT_EQ(ch.w1.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ch.b1.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ch.w2.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ch.b2, 0.0);
  }
}

namespace {

void expect_matches_fd(const DdrScene& scene, const Camera& cam, double dt, const Image& up_h, const Image& up_l,
                       const RasterConfig& cfg, double tol) {
  const auto loss = [&](const DdrScene& s) {
    const auto r = rasterize_dual(s, cam, dt, cfg);
    double v = 0.0;
    for (std::size_t i = 0; i < r.hdr.pixels.data.size(); ++i) {
      v += up_h.data[i] * r.hdr.pixels.data[i] + up_l.data[i] * r.ldr.pixels.data[i];
    }
    return v;
  };
  const auto analytic = flatten(rasterize_dual_backward(scene, cam, dt, up_h, up_l, cfg));
  const auto fd = central_differences(scene, loss, 1e-4);
  ASSERT_EQ(analytic.size(), fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (fd[i].cls == ParamClass::sh_bias && !scene.sh_bias_learnable) continue;
    const double a = analytic[i], f = fd[i].numeric;
    const double scale = std::max({std::abs(a), std::abs(f), 1e-6});
    EXPECT_LT(std::abs(a - f) / scale, tol)
        << to_string(fd[i].cls) << " gaussian " << fd[i].gaussian << " slot " << fd[i].offset << " analytic " << a
        << " fd " << f;
  }
}

}  // namespace

TEST(RasterizeDualBackward, SingleGaussianSumOfLdrMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  DdrScene scene = random_scene(rng, {.n = 1, .sh_degree = 3, .hidden = 8, .extent = 0.2});
  scene.gaussians[0].log_scale = Vec3(std::log(0.4), std::log(0.25), std::log(0.3));
  scene.gaussians[0].opacity_logit = 0.3;
  const Camera cam = front_camera();
  const Image zero(32, 32), ones(32, 32, 1.0);
  expect_matches_fd(scene, cam, 1.3, zero, ones, {}, 1e-4);
}

TEST(RasterizeDualBackward, SeveralGaussiansBothPassesMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  DdrScene scene = random_scene(rng, {.n = 4, .sh_degree = 2, .hidden = 6, .extent = 0.5});
  scene.background = Vec3(0.2, 0.1, 0.05);
  scene.sh_bias = 0.2;
  scene.sh_bias_learnable = true;
  const Camera cam = front_camera(24);
  Image up_h(24, 24), up_l(24, 24);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : up_h.data) v = n(rng);
  for (auto& v : up_l.data) v = n(rng);
  expect_matches_fd(scene, cam, 0.6, up_h, up_l, {}, 1e-4);
}

TEST(RasterizeDualBackward, LinearToneDomainMatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  DdrScene scene = random_scene(rng, {.n = 3, .sh_degree = 1, .hidden = 6, .extent = 0.5});
  const Camera cam = front_camera(24);
  RasterConfig cfg;
  cfg.tone_domain = ToneDomain::linear;
  const Image ones(24, 24, 1.0);
  expect_matches_fd(scene, cam, 0.8, ones, ones, cfg, 1e-4);
}
