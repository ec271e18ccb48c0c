#include "ddrgs/scene.hpp"

#include "../support/test_support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ddrgs;
using namespace ddrgs::testing;

TEST(BuildCovariance, IdentityRotationUnitScale) {
  const Mat3 cov = build_covariance(Vec4(1, 0, 0, 0), Vec3::Zero());
  EXPECT_TRUE(cov.isApprox(Mat3::Identity(), 1e-15));
}

TEST(BuildCovariance, AxisScale) {
  const Mat3 cov = build_covariance(Vec4(1, 0, 0, 0), Vec3(std::log(2.0), 0.0, 0.0));
  Mat3 expected = Mat3::Identity();
  expected(0, 0) = 4.0;
  EXPECT_LT((cov - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildCovariance, MatchesDenseOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec4 q = random_unit_quaternion(rng);
    const Vec3 s(n(rng), n(rng), n(rng));
    const Mat3 cov = build_covariance(q, s);
    EXPECT_LT((cov - covariance_oracle(q, s)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(cov(0, 1), cov(1, 0));
    EXPECT_EQ(cov(0, 2), cov(2, 0));
    EXPECT_EQ(cov(1, 2), cov(2, 1));
  }
}

TEST(BuildCovariance, NormalizesQuaternionInternally) {
  const Vec4 q(0.3, -0.2, 0.9, 0.1);
  const Vec3 s(0.1, -0.4, 0.2);
  EXPECT_LT((build_covariance(3.0 * q, s) - build_covariance(q / q.norm(), s)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(BuildCovariance, PositiveSemidefiniteProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ls(-6.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Mat3 cov = build_covariance(random_unit_quaternion(rng), Vec3(ls(rng), ls(rng), ls(rng)));
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  EXPECT_GE(worst, -1e-10);
}

TEST(BuildCovariance, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec4 q = Vec4(n(rng), n(rng), n(rng), n(rng));  // deliberately not unit
    const Vec3 s(0.3 * n(rng), 0.3 * n(rng), 0.3 * n(rng));
    Mat3 w;
    for (int i = 0; i < 9; ++i) w.data()[i] = n(rng);
    const auto loss = [&](const Vec4& qq, const Vec3& ss) { return (w.cwiseProduct(build_covariance(qq, ss))).sum(); };
    Vec4 dq;
    Vec3 ds;
    build_covariance_backward(q, s, w, dq, ds);
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
      Vec4 qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      EXPECT_NEAR(dq[k], (loss(qp, s) - loss(qm, s)) / (2 * h), 1e-6 * std::max(1.0, std::abs(dq[k])));
    }
    for (int k = 0; k < 3; ++k) {
      Vec3 sp = s, sm = s;
      sp[k] += h;
      sm[k] -= h;
      EXPECT_NEAR(ds[k], (loss(q, sp) - loss(q, sm)) / (2 * h), 1e-6 * std::max(1.0, std::abs(ds[k])));
    }
  }
}

TEST(EvalSh, DegreeZeroIsConstant) {
  const double c = 0.7;
  const std::vector<Vec3> k{Vec3::Constant(c)};
  const Vec3 out = eval_sh(Vec3(0.6, 0.0, 0.8), k, 0);
  const double expected = c / (2.0 * std::sqrt(std::numbers::pi));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out[i], expected);
}

TEST(EvalSh, ZeroCoefficientsGiveZero) {
  const std::vector<Vec3> k(16, Vec3::Zero());
  EXPECT_EQ(eval_sh(Vec3(0.0, 1.0, 0.0), k, 3), Vec3::Zero());
}

TEST(EvalSh, MatchesLegendreOracle) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int degree = 0; degree <= 3; ++degree) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Vec3> k(sh_coeff_count(degree));
      for (auto& c : k) c = {n(rng), n(rng), n(rng)};
      Vec3 dir = trial == 0 ? Vec3(0, 0, 1) : Vec3(n(rng), n(rng), n(rng)).normalized();
      EXPECT_LT((eval_sh(dir, k, degree) - eval_sh_oracle(dir, k, degree)).cwiseAbs().maxCoeff(), 1e-12)
          << "degree " << degree;
    }
  }
}

TEST(EvalSh, RejectsCoefficientCountMismatch) {
  const std::vector<Vec3> k(4, Vec3::Zero());
  EXPECT_THROW(eval_sh(Vec3::UnitZ(), k, 2), StructuralError);
  EXPECT_THROW(eval_sh(Vec3::UnitZ(), k, 4), StructuralError);
}

TEST(ShBasis, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 d = Vec3(n(rng), n(rng), n(rng)).normalized();
    const auto g = sh_basis_gradient(d, 3);
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = d, dm = d;
      dp[k] += 1e-6;
      dm[k] -= 1e-6;
      const auto bp = sh_basis(dp, 3);
      const auto bm = sh_basis(dm, 3);
      for (int b = 0; b < kMaxShCoeffs; ++b) EXPECT_NEAR(g[b][k], (bp[b] - bm[b]) / 2e-6, 1e-8);
    }
  }
}

TEST(HdrColor, Examples) {
  EXPECT_EQ(hdr_color(Vec3::UnitX(), std::vector<Vec3>(16, Vec3::Zero()), 3), Vec3::Ones());
  const double c0 = 2.0 * std::sqrt(std::numbers::pi);
  const std::vector<Vec3> k{Vec3(std::log(2.0), 0.0, -std::log(2.0)) * c0};
  const Vec3 out = hdr_color(Vec3::UnitZ(), k, 0);
  EXPECT_NEAR(out[0], 2.0, 1e-14);
  EXPECT_NEAR(out[1], 1.0, 1e-14);
  EXPECT_NEAR(out[2], 0.5, 1e-14);
}

TEST(HdrColor, MatchesOracleCompositionAndIsPositive) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> k(16);
    for (auto& c : k) c = {n(rng), n(rng), n(rng)};
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 got = hdr_color(dir, k, 3);
    const Vec3 want = eval_sh_oracle(dir, k, 3).array().exp();
    for (int c = 0; c < 3; ++c) {
      EXPECT_TRUE(std::isfinite(got[c]));
      EXPECT_GT(got[c], 0.0);
      EXPECT_NEAR(got[c], want[c], 1e-12 * std::max(1.0, want[c]));
    }
  }
}

TEST(HdrColor, DegreeZeroIgnoresDirection) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::vector<Vec3> k{Vec3(0.3, -1.2, 0.8)};
  const Vec3 ref = hdr_color(Vec3::UnitZ(), k, 0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(hdr_color(Vec3(n(rng), n(rng), n(rng)).normalized(), k, 0), ref);
  }
}

TEST(Parameterization, RoundTrips) {
  for (double a : {1e-6, 0.01, 0.1, 0.5, 0.9, 0.999}) EXPECT_NEAR(sigmoid(logit(a)), a, 1e-12);
  for (double s : {1e-4, 0.05, 1.0, 17.0}) EXPECT_NEAR(std::exp(std::log(s)), s, 1e-12 * s);
  DdrGaussian g;
  g.opacity_logit = logit(0.25);
  g.log_scale = Vec3(std::log(0.5), 0.0, std::log(3.0));
  EXPECT_NEAR(g.opacity(), 0.25, 1e-12);
  EXPECT_NEAR(g.scale()[2], 3.0, 1e-12);
}

TEST(Camera, ValidationRejectsBadInputs) {
  Camera cam = make_camera(32, 32, Vec3(0, 0, -4), Vec3::Zero());
  EXPECT_NO_THROW(cam.validate());
  EXPECT_NEAR(cam.position().z(), -4.0, 1e-12);

  Camera bad = cam;
  bad.exposure_time = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = cam;
  bad.extrinsics(0, 0) *= 1.01;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = cam;
  bad.extrinsics.row(0).swap(bad.extrinsics.row(1));  // det -1
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(DdrScene, ValidateChecksShLengthAndCap) {
  std::mt19937_64 rng(1);
  DdrScene scene = random_scene(rng, {.n = 3, .sh_degree = 2});
  EXPECT_NO_THROW(scene.validate());
  EXPECT_THROW(scene.validate(2), StructuralError);
  scene.gaussians[1].sh_coeffs.pop_back();
  EXPECT_THROW(scene.validate(), StructuralError);
}
