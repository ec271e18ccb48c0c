#pragma once

#include "ddrgs/dataset.hpp"

#include <cstdint>

namespace ddrgs {

struct InitOptions {
  int sh_degree = 3;
  int tone_hidden = 64;
  double initial_opacity = 0.1;
  std::uint64_t seed = 0;
  bool random_cube_fallback = false;  // only used when the manifest has no sparse points
  int random_cube_points = 1000;
};

/// Mean Euclidean distance from each point to its k nearest other points
/// (fewer when the cloud is smaller). Grid-accelerated.
std::vector<double> mean_knn_distance(const std::vector<Vec3>& points, int k = 3);

/// One isotropic Gaussian per sparse point, log scale from the 3-NN distance,
/// white HDR colour (all SH zero), opacity `initial_opacity`, random tone mapper.
DdrScene init_scene(const DatasetManifest& manifest, const InitOptions& opt = {});

/// 1.1 * the largest camera-centre distance from their mean (the 3DGS notion
/// of scene extent).
double camera_extent(const DatasetManifest& manifest);

}  // namespace ddrgs
