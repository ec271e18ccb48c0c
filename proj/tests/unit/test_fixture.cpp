#include "ddrgs/fixture.hpp"
#include "ddrgs/image_io.hpp"
#include "ddrgs/rasterizer.hpp"

#include "../support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace ddrgs;
using namespace ddrgs::testing;

namespace {

FixtureSpec small_spec() {
  FixtureSpec s;
  s.n_gaussians = 40;
  s.image_size = 24;
  s.n_train = 6;
  s.n_test = 2;
  s.fit_gt_tone_mapper = false;
  return s;
}

}  // namespace

TEST(Fixture, LayoutMatchesSpec) {
  const FixtureSpec spec = small_spec();
  const Fixture fx = make_fixture(spec);
  EXPECT_EQ(fx.ground_truth.scene.size(), 40u);
  EXPECT_EQ(fx.manifest.indices(Split::train).size(), 6u);
  EXPECT_EQ(fx.manifest.indices(Split::test).size(), 2u * spec.exposures.size());
  EXPECT_EQ(fx.manifest.exposure_set, spec.train_exposures);
  EXPECT_EQ(fx.manifest.sparse_points.size(), 40u);
  EXPECT_EQ(fx.ground_truth.cameras.size(), 6u);
  std::map<double, int> per_exposure;
  for (auto i : fx.manifest.indices(Split::train)) ++per_exposure[fx.manifest.views[i].exposure_time];
  ASSERT_EQ(per_exposure.size(), 3u);
  for (const auto& [t, n] : per_exposure) EXPECT_EQ(n, 2) << t;
  EXPECT_NO_THROW(fx.manifest.validate());
}

TEST(Fixture, LdrIsTheClippedGammaOfHdr) {
  const Fixture fx = make_fixture(small_spec());
  int unclipped = 0;
  for (std::size_t v = 0; v < fx.manifest.views.size(); ++v) {
    const double dt = fx.manifest.views[v].exposure_time;
    for (std::size_t k = 0; k < fx.hdr[v].size(); ++k) {
      const double x = fx.hdr[v].data[k] * dt;
      const double want = x >= 1.0 ? 1.0 : std::pow(x, 1.0 / 2.2);
      ASSERT_NEAR(fx.ldr[v].data[k], want, 1e-12);
      unclipped += x < 1.0;
    }
  }
  EXPECT_GT(unclipped, 0);
}

TEST(Fixture, DoublingExposureScalesUnclippedPixels) {
  const Fixture fx = make_fixture(small_spec());
  const Image& hdr = fx.hdr[fx.manifest.indices(Split::test).front()];
  const Image a = apply_crf(hdr, 0.125, 2.2);
  const Image b = apply_crf(hdr, 0.25, 2.2);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (hdr.data[k] * 0.25 < 1.0) ASSERT_NEAR(b.data[k], std::pow(2.0, 1.0 / 2.2) * a.data[k], 1e-12);
  }
}

TEST(Fixture, GroundTruthSceneReproducesHdrTargets) {
  const Fixture fx = make_fixture(small_spec());
  RasterConfig exact;
  exact.cull = false;
  for (std::size_t v = 0; v < fx.manifest.views.size(); ++v) {
    const auto r = rasterize_dual(fx.ground_truth.scene, fx.manifest.camera(v), 1.0, exact);
    for (std::size_t k = 0; k < r.hdr.pixels.size(); ++k) {
      const double want = fx.hdr[v].data[k];
      ASSERT_NEAR(r.hdr.pixels.data[k], want, 1e-7 * std::max(1.0, want));
    }
  }
}

TEST(Fixture, TestPosesShareOneHdrTarget) {
  const Fixture fx = make_fixture(small_spec());
  std::map<std::string, int> uses;
  for (auto i : fx.manifest.indices(Split::test)) ++uses[*fx.manifest.views[i].hdr_image];
  EXPECT_EQ(uses.size(), 2u);
  for (const auto& [name, n] : uses) EXPECT_EQ(n, 5) << name;
}

TEST(Fixture, GenerationIsByteDeterministic) {
  TempDir a("fxa"), b("fxb");
  generate_fixture(small_spec(), a.path());
  generate_fixture(small_spec(), b.path());
  int files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    ASSERT_TRUE(std::filesystem::exists(b.path() / rel)) << rel;
    EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20);
  EXPECT_TRUE(std::filesystem::exists(a / "gt.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(a / "sparse/points3D.txt"));
}

TEST(Fixture, SeedChangesTheScene) {
  FixtureSpec s = small_spec();
  const Fixture a = make_fixture(s);
  s.seed = 1;
  const Fixture b = make_fixture(s);
  EXPECT_NE(a.ground_truth.scene.gaussians[0].position, b.ground_truth.scene.gaussians[0].position);
}

TEST(Fixture, RejectsDegenerateSpecs) {
  FixtureSpec s = small_spec();
  s.train_exposures.clear();
  EXPECT_THROW(make_fixture(s), ConfigError);
}
