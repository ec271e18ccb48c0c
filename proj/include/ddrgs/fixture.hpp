#pragma once

#include "ddrgs/checkpoint.hpp"
#include "ddrgs/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ddrgs {

/// Synthetic multi-exposure dataset with known HDR ground truth.
struct FixtureSpec {
  int n_gaussians = 200;
  int image_size = 64;
  int n_train = 20;
  int n_test = 10;                                        // held-out poses, each at every exposure
  std::vector<double> exposures = {0.125, 0.25, 2.0, 8.0, 32.0};
  std::vector<double> train_exposures = {0.125, 2.0, 32.0};
  double crf_gamma = 2.2;
  std::uint64_t seed = 0;
  double camera_radius = 4.0;
  double fov_deg = 50.0;
  double max_azimuth_deg = 40.0;                          // cameras within these angles of +z
  double max_elevation_deg = 30.0;
  double scene_radius = 2.0;                              // radius of the gaussian shell
  double cap_angle_deg = 90.0;                            // gaussians within this angle of +z
  double log_scale_min = -0.9;                            // tangential std dev, log
  double log_scale_max = -0.6;
  double shell_thickness = 0.03;                          // std dev along the normal
  double opacity_min = 0.95;
  double opacity_max = 0.99;
  double hdr_min = 0.002;                                 // HDR colour range of the field
  double hdr_max = 5.0;
  double sparse_noise = 0.01;
  bool fit_gt_tone_mapper = true;                         // store a CRF-fitted MLP in gt.ckpt
};

struct Fixture {
  DatasetManifest manifest;
  Checkpoint ground_truth;    // degree-0 scene; cameras = training poses
  std::vector<Image> ldr;     // per manifest view, before 8-bit quantization
  std::vector<Image> hdr;     // per manifest view (float32-representable)
};

/// Builds the dataset in memory. Same spec and seed give identical results.
Fixture make_fixture(const FixtureSpec& spec);

/// make_fixture + writes manifest.json, images/*.png, hdr/*.pfm, sparse/*.txt,
/// gt.ckpt and fixture.json under `dir`.
Fixture generate_fixture(const FixtureSpec& spec, const std::filesystem::path& dir);

/// The dataset exactly as load_dataset would see it after generate_fixture:
/// LDR targets quantized to 8 bits, HDR targets as stored.
Dataset fixture_dataset(const Fixture& fx);

/// The per-pixel CRF applied to an HDR raster at exposure `dt`.
Image apply_crf(const Image& hdr, double dt, double gamma);

}  // namespace ddrgs
