#include "ddrgs/tone_mapper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace ddrgs;

namespace {

ToneMapper zero_final_layer(int hidden, std::mt19937_64& rng) {
  ToneMapper tm = ToneMapper::random(hidden, rng);
  for (auto& ch : tm.channels) {
    ch.w2.setZero();
    ch.b2 = 0.0;
  }
  return tm;
}

bool bit_equal(const Vec3& a, const Vec3& b) { return std::memcmp(a.data(), b.data(), sizeof(double) * 3) == 0; }

}  // namespace

TEST(ToneMap, ZeroFinalLayerGivesMidGrey) {
  std::mt19937_64 rng(1);
  const ToneMapper tm = zero_final_layer(64, rng);
  EXPECT_EQ(tone_map(tm, Vec3(0.1, 3.0, 70.0), 0.25), Vec3::Constant(0.5));
  EXPECT_EQ(tone_map_linear_variant(tm, Vec3(0.1, 3.0, 70.0), 0.25), Vec3::Constant(0.5));
}

TEST(ToneMap, InitialOutputNearMidGrey) {
  std::mt19937_64 rng(2);
  const ToneMapper tm = ToneMapper::random(64, rng);
  for (const auto& ch : tm.channels) {
    EXPECT_EQ(ch.b2, 0.0);
    EXPECT_LE(ch.w2.cwiseAbs().maxCoeff(), 1.0 / 8.0);
    EXPECT_LE(ch.w1.cwiseAbs().maxCoeff(), 1.0);
  }
  const Vec3 out = tone_map(tm, Vec3::Ones(), 1.0);
  EXPECT_LT((out.array() - 0.5).abs().maxCoeff(), 0.25);
}

TEST(ToneMap, ExposureScaleEquivalenceIsExact) {
  std::mt19937_64 rng(3);
  const ToneMapper tm = ToneMapper::random(64, rng);
  const Vec3 c(0.3, 1.7, 12.0);
  EXPECT_TRUE(bit_equal(tone_map(tm, 2.0 * c, 0.5, 0.1), tone_map(tm, c, 1.0, 0.1)));
}

TEST(ToneMap, RadianceExposureExchangeAcrossRandomSamples) {
  std::mt19937_64 rng(4);
  const ToneMapper tm = ToneMapper::random(64, rng);
  std::uniform_real_distribution<double> lc(-5.0, 3.0), lt(-3.0, 4.0);
  std::uniform_int_distribution<int> e(-12, 12);
  std::uniform_real_distribution<double> lk(-4.0, 4.0);
  double worst_general = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 c(std::exp(lc(rng)), std::exp(lc(rng)), std::exp(lc(rng)));
    const double dt = std::exp(lt(rng));
    const double k = std::ldexp(1.0, e(rng));
    ASSERT_TRUE(bit_equal(tone_map(tm, k * c, dt), tone_map(tm, c, k * dt)));
    const double kr = std::exp(lk(rng));
    worst_general = std::max(worst_general, (tone_map(tm, kr * c, dt) - tone_map(tm, c, kr * dt)).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst_general, 1e-13);
}

TEST(ToneMap, RejectsNonPositiveInputs) {
  std::mt19937_64 rng(5);
  const ToneMapper tm = ToneMapper::random(8, rng);
  EXPECT_THROW(tone_map(tm, Vec3(1, 0, 1), 1.0), DomainError);
  EXPECT_THROW(tone_map(tm, Vec3(1, 1, -1), 1.0), DomainError);
  EXPECT_THROW(tone_map(tm, Vec3::Ones(), 0.0), DomainError);
  EXPECT_THROW(tone_map(tm, Vec3::Ones(), -2.0), DomainError);
}

TEST(ToneMap, OutputStaysInsideOpenUnitInterval) {
  std::mt19937_64 rng(6);
  const ToneMapper tm = ToneMapper::random(64, rng);
  ToneMapper big = tm;
  for (auto& ch : big.channels) ch.w2 *= 1e3;
  std::uniform_real_distribution<double> x(-200.0, 200.0);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 in(x(rng), x(rng), x(rng));
    for (const ToneMapper* t : {&tm, static_cast<const ToneMapper*>(&big)}) {
      const Vec3 out = t->apply(in);
      EXPECT_GT(out.minCoeff(), 0.0);
      EXPECT_LT(out.maxCoeff(), 1.0);
    }
  }
}

TEST(ToneMapLinearVariant, DependsOnlyOnTheProduct) {
  std::mt19937_64 rng(7);
  const ToneMapper tm = ToneMapper::random(64, rng);
  const Vec3 x(0.2, 0.9, 4.0);
  const double t = 0.37;
  EXPECT_TRUE(bit_equal(tone_map_linear_variant(tm, x, t), tone_map_linear_variant(tm, x * t, 1.0)));
}

TEST(ToneMap, ChannelsAreIndependent) {
  std::mt19937_64 rng(8);
  const ToneMapper tm = ToneMapper::random(64, rng);
  ToneMapper perturbed = tm;
  perturbed.channels[0].w1.array() += 0.3;
  perturbed.channels[0].b2 = 2.0;
  const Vec3 in(0.4, -0.7, 1.3);
  const Vec3 a = tm.apply(in), b = perturbed.apply(in);
  EXPECT_NE(a[0], b[0]);
  EXPECT_EQ(std::memcmp(&a[1], &b[1], sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&a[2], &b[2], sizeof(double)), 0);
}

TEST(ToneMapGrad, ConstantFunctionHasZeroInputGradient) {
  std::mt19937_64 rng(9);
  ToneMapper tm = ToneMapper::random(16, rng);
  for (auto& ch : tm.channels) ch.w1.setZero();
  const auto g = tone_map_grad(tm, Vec3(0.3, -0.2, 1.0), Vec3(1.0, -2.0, 0.5));
  EXPECT_EQ(g.input, Vec3::Zero());
}

TEST(ToneMapGrad, MatchesCentralDifferences) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ToneMapper tm = ToneMapper::random(64, rng);
    const Vec3 in(n(rng), n(rng), n(rng));
    const Vec3 up(n(rng), n(rng), n(rng));
    const auto g = tone_map_grad(tm, in, up);
    const auto loss = [&](const ToneMapper& t, const Vec3& x) { return up.dot(t.apply(x)); };
    const double h = 1e-5;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (int c = 0; c < 3; ++c) {
      Vec3 p = in, m = in;
      p[c] += h;
      m[c] -= h;
      EXPECT_LT(rel(g.input[c], (loss(tm, p) - loss(tm, m)) / (2 * h)), 1e-6);
    }
    // Parameters of the green channel, every slot.
    const auto& ch = tm.channels[1];
    const auto& gch = g.params.channels[1];
    for (int j = 0; j < ch.hidden_width(); ++j) {
      for (int which = 0; which < 3; ++which) {
        ToneMapper p = tm, m = tm;
        auto pick = [&](ToneMapper& t) -> double& {
          auto& c1 = t.channels[1];
          return which == 0 ? c1.w1[j] : which == 1 ? c1.b1[j] : c1.w2[j];
        };
        pick(p) += h;
        pick(m) -= h;
        const double fd = (loss(p, in) - loss(m, in)) / (2 * h);
        const double an = which == 0 ? gch.w1[j] : which == 1 ? gch.b1[j] : gch.w2[j];
        if (std::abs(an) < 1e-10 && std::abs(fd) < 1e-10) continue;
        EXPECT_LT(rel(an, fd), 1e-6) << "slot " << which << " unit " << j;
      }
    }
  }
}

TEST(ToneMapGrad, DuplicatedInputsAccumulateLinearly) {
  std::mt19937_64 rng(11);
  const ToneMapper tm = ToneMapper::random(32, rng);
  const Vec3 in(0.5, 0.1, -0.4), up(1.0, 0.5, -1.5);
  const auto once = tone_map_grad(tm, in, up);
  ToneMapper acc = tm.zeros_like();
  for (int rep = 0; rep < 2; ++rep) {
    for (int c = 0; c < 3; ++c) tm.channels[c].backward(in[c], up[c], acc.channels[c]);
  }
  for (int c = 0; c < 3; ++c) {
    EXPECT_LT((acc.channels[c].w1 - 2.0 * once.params.channels[c].w1).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((acc.channels[c].w2 - 2.0 * once.params.channels[c].w2).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(acc.channels[c].b2, 2.0 * once.params.channels[c].b2, 1e-15);
  }
}
