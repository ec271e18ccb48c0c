#include "ddrgs/fixture.hpp"
#include "ddrgs/metrics.hpp"

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <cmath>
#include <random>

using namespace ddrgs;
using namespace ddrgs::testing;

TEST(Psnr, IdenticalImagesGiveInfinity) {
  std::mt19937_64 rng(1);
  const Image a = random_image(rng, 9, 7);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_GT(psnr(a, a), 0.0);
}

TEST(Psnr, ConstantOffsetOfOneTenthIsTwentyDb) {
  Image a(8, 8, 0.3), b(8, 8, 0.4);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(Psnr, MatchesDirectFormulaAndIsSymmetric) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Image a = random_image(rng, 16, 11), b = random_image(rng, 16, 11);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    const double want = -10.0 * std::log10(s / static_cast<double>(a.size()));
    EXPECT_NEAR(psnr(a, b), want, 1e-10);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
  }
  EXPECT_NEAR(psnr(Image(4, 4, 0.0), Image(4, 4, 2.0), 4.0), 10.0 * std::log10(4.0), 1e-12);
}

TEST(Psnr, ShapeMismatchIsStructural) {
  EXPECT_THROW(psnr(Image(4, 4), Image(4, 5)), StructuralError);
}

TEST(MetricSsim, SymmetricAndBoundedByOne) {
  std::mt19937_64 rng(3);
  const Image a = random_image(rng, 20, 20), b = random_image(rng, 20, 20);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  EXPECT_LT(ssim(a, b), 1.0);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-15);
}

TEST(EvaluateHdr, PerfectRenderScoresInfinityAndOne) {
  std::mt19937_64 rng(4);
  const Image t = random_image(rng, 12, 12, 0.01, 50.0);
  const auto s = evaluate_hdr(t, t);
  EXPECT_TRUE(std::isinf(s.psnr));
  EXPECT_NEAR(s.ssim, 1.0, 1e-15);
}

TEST(EvaluateHdr, InvariantToPositiveRescaling) {
  std::mt19937_64 rng(5);
  const Image r = random_image(rng, 14, 10, 0.01, 20.0), t = random_image(rng, 14, 10, 0.01, 20.0);
  const auto base = evaluate_hdr(r, t);
  for (double k : {0.5, 4.0, 1e3}) {
    Image rk = r, tk = t;
    for (double& v : rk.data) v *= k;
    for (double& v : tk.data) v *= 1.0 / k;
    const auto s = evaluate_hdr(rk, tk);
    EXPECT_NEAR(s.psnr, base.psnr, 1e-9);
    EXPECT_NEAR(s.ssim, base.ssim, 1e-12);
  }
  // A render that differs from the target only by scale is perfect.
  Image r2 = t;
  for (double& v : r2.data) v *= 7.0;
  EXPECT_GT(evaluate_hdr(r2, t).psnr, 250.0);
}

TEST(EvaluateHdr, MatchesComposedOracle) {
  std::mt19937_64 rng(6);
  const Image r = random_image(rng, 10, 9, 0.0, 8.0), t = random_image(rng, 10, 9, 0.0, 8.0);
  const auto norm = [](const Image& x) {
    double lo = x.data[0], hi = x.data[0];
    for (double v : x.data) lo = std::min(lo, v), hi = std::max(hi, v);
    Image y = x;
    for (double& v : y.data) v = std::log1p(5000.0 * (v - lo) / (hi - lo)) / std::log1p(5000.0);
    return y;
  };
  const Image a = norm(r), b = norm(t);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  const double want = -10.0 * std::log10(s / static_cast<double>(a.size()));
  const auto got = evaluate_hdr(r, t, 5000.0);
  EXPECT_NEAR(got.psnr, want, 1e-9);
  EXPECT_NEAR(got.ssim, ssim_oracle(a, b), 1e-10);
}

namespace {

Fixture tiny_fixture() {
  FixtureSpec s;
  s.n_gaussians = 60;
  s.image_size = 24;
  s.n_train = 6;
  s.n_test = 2;
  s.fit_gt_tone_mapper = false;
  return make_fixture(s);
}

}  // namespace

TEST(EvaluateSplit, GroupsFollowManifestExposureTags) {
  const Fixture fx = tiny_fixture();
  const Dataset ds = fixture_dataset(fx);
  const SplitReport rep = evaluate_split(fx.ground_truth.scene, ds, Split::test);
  ASSERT_EQ(rep.groups.size(), 3u);
  std::size_t oe = 0, ne = 0;
  for (auto i : ds.manifest.indices(Split::test)) {
    const double t = ds.manifest.views[i].exposure_time;
    const bool trained = std::find(ds.manifest.exposure_set.begin(), ds.manifest.exposure_set.end(), t) !=
                         ds.manifest.exposure_set.end();
    (trained ? oe : ne) += 1;
  }
  EXPECT_EQ(rep.find(ViewGroup::ldr_oe)->n_views, oe);
  EXPECT_EQ(rep.find(ViewGroup::ldr_ne)->n_views, ne);
  EXPECT_EQ(rep.find(ViewGroup::hdr)->n_views, 2u);  // one per pose, not per exposure
  EXPECT_EQ(oe, 6u);
  EXPECT_EQ(ne, 4u);
}

TEST(EvaluateSplit, GroundTruthSceneScoresHdrPerfectly) {
  Fixture fx = tiny_fixture();
  const Dataset ds = fixture_dataset(fx);
  EvalOptions opt;
  opt.raster.cull = false;
  const SplitReport rep = evaluate_split(fx.ground_truth.scene, ds, Split::test, opt);
  // The stored targets are float32, so HDR agreement is to single precision.
  EXPECT_GT(rep.find(ViewGroup::hdr)->psnr_mean, 100.0);
  EXPECT_NEAR(rep.find(ViewGroup::hdr)->ssim_mean, 1.0, 1e-9);
}

TEST(EvaluateSplit, PerfectLdrTargetsGiveInfinity) {
  const Fixture fx = tiny_fixture();
  Dataset ds = fixture_dataset(fx);
  // Replace the targets by the scene's own renders.
  for (std::size_t i = 0; i < ds.ldr.size(); ++i) {
    const auto r = rasterize_dual(fx.ground_truth.scene, ds.manifest.camera(i), ds.manifest.views[i].exposure_time);
    ds.ldr[i] = r.ldr.pixels;
    ds.hdr[i] = r.hdr.pixels;
  }
  const SplitReport rep = evaluate_split(fx.ground_truth.scene, ds, Split::test);
  for (const auto& g : rep.groups) EXPECT_TRUE(std::isinf(g.psnr_mean)) << to_string(g.group);
  const auto j = nlohmann::json::parse(rep.to_json());
  EXPECT_EQ(j["split"], "test");
  for (const auto& g : j["groups"]) {
    EXPECT_TRUE(g["psnr_mean"].is_null());
    EXPECT_TRUE(g["ssim_mean"].is_number());
    EXPECT_TRUE(g["n_views"].is_number_unsigned());
    EXPECT_EQ(g["split"], "test");
  }
  const std::string table = format_report_table({rep});
  EXPECT_NE(table.find("inf"), std::string::npos);
  EXPECT_NE(table.find("LDR-OE"), std::string::npos);
  EXPECT_NE(table.find("LDR-NE"), std::string::npos);
}

TEST(EvaluateSplit, EmptySplitGivesEmptyReport) {
  Fixture fx = tiny_fixture();
  Dataset ds = fixture_dataset(fx);
  for (auto& v : ds.manifest.views) v.split = Split::train;
  const SplitReport rep = evaluate_split(fx.ground_truth.scene, ds, Split::test);
  EXPECT_TRUE(rep.groups.empty());
  EXPECT_EQ(nlohmann::json::parse(rep.to_json())["groups"].size(), 0u);
  EXPECT_NE(format_report_table({rep}).find("test"), std::string::npos);
}

TEST(ReportJson, SchemaAndFiniteValues) {
  SplitReport r;
  r.split = Split::train;
  r.groups.push_back({ViewGroup::ldr_oe, 3, 31.5, 0.97});
  const auto j = nlohmann::json::parse(format_report_json({r}));
  ASSERT_EQ(j["reports"].size(), 1u);
  const auto& g = j["reports"][0]["groups"][0];
  EXPECT_EQ(g["group"], "LDR-OE");
  EXPECT_EQ(g["n_views"], 3);
  EXPECT_DOUBLE_EQ(g["psnr_mean"].get<double>(), 31.5);
  EXPECT_DOUBLE_EQ(g["ssim_mean"].get<double>(), 0.97);
}
