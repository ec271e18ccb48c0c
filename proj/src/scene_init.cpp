#include "ddrgs/scene_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

namespace ddrgs {

namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

}  // namespace

std::vector<double> mean_knn_distance(const std::vector<Vec3>& pts, int k) {
  const std::size_t n = pts.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const int kk = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), n - 1));

  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = std::max((hi - lo).norm(), 1e-12);
  const double cell = std::max(diag / std::cbrt(static_cast<double>(n)), 1e-12);
  const auto key = [&](const Vec3& p) {
    return CellKey{static_cast<long long>(std::floor((p.x() - lo.x()) / cell)),
                   static_cast<long long>(std::floor((p.y() - lo.y()) / cell)),
                   static_cast<long long>(std::floor((p.z() - lo.z()) / cell))};
  };
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  for (std::size_t i = 0; i < n; ++i) grid[key(pts[i])].push_back(i);
  const long long max_ring = static_cast<long long>(std::ceil(diag / cell)) + 1;

  std::vector<double> best;
  for (std::size_t i = 0; i < n; ++i) {
    const CellKey c = key(pts[i]);
    best.assign(static_cast<std::size_t>(kk), std::numeric_limits<double>::infinity());
    for (long long r = 0; r <= max_ring; ++r) {
      // Every point outside ring r is at least r * cell away.
      if (best.back() <= static_cast<double>(r - 1) * cell && r > 0) break;
      for (long long dx = -r; dx <= r; ++dx) {
        for (long long dy = -r; dy <= r; ++dy) {
          for (long long dz = -r; dz <= r; ++dz) {
            if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != r) continue;
            const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
              if (j == i) continue;
              const double d = (pts[i] - pts[j]).norm();
              if (d < best.back()) {
                best.back() = d;
                std::sort(best.begin(), best.end());
              }
            }
          }
        }
      }
    }
    double s = 0.0;
    for (double d : best) s += d;
    out[i] = s / kk;
  }
  return out;
}

double camera_extent(const DatasetManifest& m) {
  if (m.views.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < m.views.size(); ++i) mean += m.camera(i).position();
  mean /= static_cast<double>(m.views.size());
  double r = 0.0;
  for (std::size_t i = 0; i < m.views.size(); ++i) r = std::max(r, (m.camera(i).position() - mean).norm());
  return 1.1 * std::max(r, 1e-6);
}

DdrScene init_scene(const DatasetManifest& manifest, const InitOptions& opt) {
  if (opt.sh_degree < 0 || opt.sh_degree > kMaxShDegree) throw ConfigError("init_scene: sh_degree must be in [0, 3]");
  if (!(opt.initial_opacity > 0.0 && opt.initial_opacity < 1.0)) throw ConfigError("init_scene: opacity must be in (0, 1)");
  std::mt19937_64 rng(opt.seed);
  std::vector<Vec3> points = manifest.sparse_points;
  if (points.empty()) {
    if (!opt.random_cube_fallback) {
      throw ConfigError("init_scene: manifest has no sparse points (enable the random-cube fallback explicitly)");
    }
    const double half = camera_extent(manifest) / 1.1;
    std::uniform_real_distribution<double> u(-half, half);
    for (int i = 0; i < opt.random_cube_points; ++i) points.emplace_back(u(rng), u(rng), u(rng));
  }
  DdrScene scene;
  scene.sh_degree = opt.sh_degree;
  scene.tone_mapper = ToneMapper::random(opt.tone_hidden, rng);
  const auto dist = mean_knn_distance(points, 3);
  const double logit0 = logit(opt.initial_opacity);
  scene.gaussians.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    DdrGaussian g;
    g.position = points[i];
    // A lone point has no neighbours; give it a small unit-free default.
    const double s = points.size() > 1 ? std::max(dist[i], 1e-7) : 0.01;
    g.log_scale = Vec3::Constant(std::log(s));
    g.opacity_logit = logit0;
    g.sh_coeffs.assign(sh_coeff_count(opt.sh_degree), Vec3::Zero());
    scene.gaussians.push_back(std::move(g));
  }
  return scene;
}

}  // namespace ddrgs
