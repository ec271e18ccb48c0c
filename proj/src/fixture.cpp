#include "ddrgs/fixture.hpp"

#include "ddrgs/colmap.hpp"
#include "ddrgs/crf.hpp"
#include "ddrgs/image_io.hpp"
#include "ddrgs/rasterizer.hpp"

#include "json.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace ddrgs {

Image apply_crf(const Image& hdr, double dt, double gamma) {
  Image out = hdr;
  for (double& v : out.data) v = gamma_crf(v * dt, gamma);
  return out;
}

namespace {

// Independent streams so that, e.g., changing the exposure set leaves poses alone.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Point i of a jittered Fibonacci lattice on the cap of the unit sphere within
// `cap` radians of +z: even coverage without the clumps and holes of
// independent samples.
Vec3 fibonacci_direction(int i, int n, double cap, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double depth = 1.0 - std::cos(cap);
  const double z = std::clamp(1.0 - depth * (i + 0.5 + jitter(rng)) / n, -1.0, 1.0);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double a = golden * i + jitter(rng) / std::sqrt(static_cast<double>(n));
  return Vec3(r * std::cos(a), r * std::sin(a), z);
}

// Quaternion (w, x, y, z) whose rotation takes +z to `normal`, spun by `spin` about it.
Vec4 tangent_frame(const Vec3& normal, double spin) {
  const Eigen::Quaterniond align = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), normal);
  const Eigen::Quaterniond q = align * Eigen::Quaterniond(Eigen::AngleAxisd(spin, Vec3::UnitZ()));
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

// Eye on a sphere around the origin, within the azimuth and elevation bounds
// measured from the +z axis.
Mat4 sphere_pose(std::mt19937_64& rng, double radius, double max_az_deg, double max_elev_deg) {
  const double half = max_az_deg * std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> az(0.5 * std::numbers::pi - half, 0.5 * std::numbers::pi + half);
  const double s = std::sin(max_elev_deg * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> el(-s, s);  // uniform in sin(elevation): area-uniform band
  const double a = az(rng), y = el(rng);
  const double r = std::sqrt(1.0 - y * y);
  const Vec3 eye = radius * Vec3(r * std::cos(a), y, r * std::sin(a));
  return look_at(eye, Vec3::Zero(), Vec3(0.0, 1.0, 0.0));
}

Image to_float32(Image img) {
  for (double& v : img.data) v = static_cast<double>(static_cast<float>(v));
  return img;
}

std::string pad(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return buf;
}

}  // namespace

Fixture make_fixture(const FixtureSpec& spec) {
  if (spec.n_gaussians < 1 || spec.image_size < 1 || spec.n_train < 1 || spec.train_exposures.empty()) {
    throw ConfigError("fixture: counts must be positive and the training exposure set non-empty");
  }
  Fixture fx;

  // Ground-truth scene: a closed shell of flat, nearly opaque gaussians
  // tangent to a sphere. Log colour is a smooth random field over the shell.
  auto rng = stream(spec.seed, 1);
  DdrScene& gt = fx.ground_truth.scene;
  gt.sh_degree = 0;
  std::uniform_real_distribution<double> ls(spec.log_scale_min, spec.log_scale_max);
  std::uniform_real_distribution<double> op(spec.opacity_min, spec.opacity_max);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<Vec3, 3> freq;
  std::array<double, 3> ph{};
  for (int c = 0; c < 3; ++c) {
    freq[c] = Vec3(n01(rng), n01(rng), n01(rng)).normalized() * (1.2 / spec.scene_radius);
    ph[c] = phase(rng);
  }
  const double lmin = std::log(spec.hdr_min), lmax = std::log(spec.hdr_max);
  const double c0 = 2.0 * std::sqrt(std::numbers::pi);
  for (int i = 0; i < spec.n_gaussians; ++i) {
    DdrGaussian g;
    const Vec3 normal = fibonacci_direction(i, spec.n_gaussians, spec.cap_angle_deg * std::numbers::pi / 180.0, rng);
    g.position = normal * spec.scene_radius;
    g.rotation = tangent_frame(normal, phase(rng));
    g.log_scale = Vec3(ls(rng), ls(rng), std::log(spec.shell_thickness));
    g.opacity_logit = logit(op(rng));
    Vec3 log_c;
    for (int c = 0; c < 3; ++c) {
      const double u = 0.5 + 0.5 * std::sin(freq[c].dot(g.position) + ph[c]);
      log_c[c] = lmin + (lmax - lmin) * u;
    }
    g.sh_coeffs = {log_c * c0};
    gt.gaussians.push_back(std::move(g));
  }
  auto tm_rng = stream(spec.seed, 2);
  gt.tone_mapper = ToneMapper::random(64, tm_rng);
  if (spec.fit_gt_tone_mapper) {
    fit_tone_mapper(gt.tone_mapper, [g = spec.crf_gamma](double x) { return gamma_crf(x, g); });
  }

  // Cameras.
  const double f = 0.5 * spec.image_size / std::tan(0.5 * spec.fov_deg * std::numbers::pi / 180.0);
  DatasetManifest& m = fx.manifest;
  m.intrinsics = {f, f, 0.5 * spec.image_size, 0.5 * spec.image_size, spec.image_size, spec.image_size};
  m.exposure_set = spec.train_exposures;
  m.sfm_exposure = spec.train_exposures[spec.train_exposures.size() / 2];
  auto pose_rng = stream(spec.seed, 3);
  std::vector<Mat4> train_poses, test_poses;
  for (int i = 0; i < spec.n_train; ++i) train_poses.push_back(sphere_pose(pose_rng, spec.camera_radius, spec.max_azimuth_deg, spec.max_elevation_deg));
  for (int i = 0; i < spec.n_test; ++i) test_poses.push_back(sphere_pose(pose_rng, spec.camera_radius, spec.max_azimuth_deg, spec.max_elevation_deg));

  // Balanced random assignment of training exposures.
  auto exp_rng = stream(spec.seed, 4);
  std::vector<double> train_dt;
  for (int i = 0; i < spec.n_train; ++i) train_dt.push_back(spec.train_exposures[i % spec.train_exposures.size()]);
  std::shuffle(train_dt.begin(), train_dt.end(), exp_rng);

  RasterConfig oracle;
  oracle.cull = false;
  const auto render_hdr = [&](const Mat4& pose) {
    Camera cam;
    cam.extrinsics = pose;
    cam.intrinsics = Camera::pinhole(f, f, m.intrinsics.cx, m.intrinsics.cy);
    cam.width = cam.height = spec.image_size;
    return to_float32(rasterize_dual(gt, cam, 1.0, oracle).hdr.pixels);
  };

  for (int i = 0; i < spec.n_train; ++i) {
    ManifestView v;
    v.name = "train_" + pad(i);
    v.image = "images/" + v.name + ".png";
    v.hdr_image = "hdr/" + v.name + ".pfm";
    v.extrinsics = train_poses[i];
    v.exposure_time = train_dt[i];
    v.split = Split::train;
    fx.hdr.push_back(render_hdr(v.extrinsics));
    fx.ldr.push_back(apply_crf(fx.hdr.back(), v.exposure_time, spec.crf_gamma));
    m.views.push_back(std::move(v));
    Camera preset = m.camera(m.views.size() - 1);
    fx.ground_truth.cameras.push_back(preset);
  }
  for (int i = 0; i < spec.n_test; ++i) {
    const Image hdr = render_hdr(test_poses[i]);
    for (std::size_t e = 0; e < spec.exposures.size(); ++e) {
      ManifestView v;
      v.name = "test_" + pad(i) + "_t" + std::to_string(e + 1);
      v.image = "images/" + v.name + ".png";
      v.hdr_image = "hdr/test_" + pad(i) + ".pfm";
      v.extrinsics = test_poses[i];
      v.exposure_time = spec.exposures[e];
      v.split = Split::test;
      fx.hdr.push_back(hdr);
      fx.ldr.push_back(apply_crf(hdr, v.exposure_time, spec.crf_gamma));
      m.views.push_back(std::move(v));
    }
  }

  auto noise_rng = stream(spec.seed, 5);
  std::normal_distribution<double> noise(0.0, spec.sparse_noise);
  for (const auto& g : gt.gaussians) m.sparse_points.push_back(g.position + Vec3(noise(noise_rng), noise(noise_rng), noise(noise_rng)));
  m.validate();
  return fx;
}

Dataset fixture_dataset(const Fixture& fx) {
  Dataset ds;
  ds.manifest = fx.manifest;
  for (std::size_t i = 0; i < fx.ldr.size(); ++i) {
    Image q = fx.ldr[i];
    for (double& v : q.data) v = quantize_unit(v) / 255.0;
    ds.ldr.push_back(std::move(q));
    if (fx.manifest.views[i].hdr_image) {
      ds.hdr.emplace_back(fx.hdr[i]);
    } else {
      ds.hdr.emplace_back(std::nullopt);
    }
  }
  return ds;
}

Fixture generate_fixture(const FixtureSpec& spec, const std::filesystem::path& dir) {
  Fixture fx = make_fixture(spec);
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "hdr");
  for (std::size_t i = 0; i < fx.manifest.views.size(); ++i) {
    const auto& v = fx.manifest.views[i];
    write_png(fx.ldr[i], dir / v.image);
    if (v.hdr_image) write_pfm(fx.hdr[i], dir / *v.hdr_image);  // shared test HDRs are rewritten identically
  }
  write_manifest(fx.manifest, dir / "manifest.json");

  SparseReconstruction rec;
  rec.cameras[1] = fx.manifest.intrinsics;
  int id = 1;
  for (const auto& v : fx.manifest.views) {
    if (v.split != Split::train) continue;
    rec.images.push_back({id++, 1, v.name + ".png", v.extrinsics});
  }
  rec.points = fx.manifest.sparse_points;
  export_colmap(rec, dir / "sparse");

  save_checkpoint(fx.ground_truth, dir / "gt.ckpt");

  nlohmann::json j = {{"n_gaussians", spec.n_gaussians}, {"image_size", spec.image_size},
                      {"n_train", spec.n_train},         {"n_test", spec.n_test},
                      {"exposures", spec.exposures},     {"train_exposures", spec.train_exposures},
                      {"crf_gamma", spec.crf_gamma},     {"seed", spec.seed},
                      {"sparse_noise", spec.sparse_noise},
                      {"camera_radius", spec.camera_radius}, {"fov_deg", spec.fov_deg},
                      {"max_azimuth_deg", spec.max_azimuth_deg}, {"max_elevation_deg", spec.max_elevation_deg},
                      {"scene_radius", spec.scene_radius}, {"cap_angle_deg", spec.cap_angle_deg}};
  std::ofstream(dir / "fixture.json") << j.dump(2) << "\n";
  return fx;
}

}  // namespace ddrgs
