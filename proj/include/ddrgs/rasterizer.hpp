#pragma once

#include "ddrgs/gradient_set.hpp"
#include "ddrgs/scene.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ddrgs {

struct RasterConfig {
  int tile_size = 16;
  double low_pass = 0.3;              // px^2 added to the projected covariance diagonal
  double max_alpha = 0.99;            // per-splat alpha clamp
  double min_alpha = 1.0 / 255.0;     // splats below this alpha at a pixel are skipped
  double min_transmittance = 1e-4;    // blending stops once T drops below this
  double near_plane = 0.01;
  ToneDomain tone_domain = ToneDomain::log;
  int active_sh_degree = -1;          // < 0 means the scene's full degree
  bool cull = true;                   // false: every splat is tested against every pixel
};

/// A Gaussian after projection into one view, with both colours evaluated.
struct ProjectedGaussian {
  Vec2 pixel_center = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();     // includes the low-pass floor
  Vec3 conic = Vec3::Zero();         // inverse cov2d as (a, b, c): [[a, b], [b, c]]
  double view_depth = 0.0;
  Vec3 hdr_color = Vec3::Ones();
  Vec3 ldr_color = Vec3::Constant(0.5);
  double opacity = 0.0;
  std::size_t source_index = 0;

  // Support of the splat: alpha * exp(power) >= min_alpha  <=>  power >= log_alpha_cut.
  double log_alpha_cut = 0.0;
  Vec2 extent = Vec2::Zero();        // half-size of the support's bounding box, px
  Vec3 cam_point = Vec3::Zero();
  Vec3 view_dir = Vec3::UnitZ();     // normalize(mu - camera position)
  double view_dist = 1.0;
  Vec3 sh_sum = Vec3::Zero();        // log HDR colour
  Vec3 tone_input = Vec3::Zero();
};

/// exp(-1/2 (x - mu)^T Sigma^-1 (x - mu)). Throws NumericalError for singular Sigma.
double gaussian_density(const Vec3& x, const Vec3& mu, const Mat3& cov);

/// Projects one Gaussian. Returns nullopt when it sits behind the near plane,
/// can never reach min_alpha, or (with culling on) its support misses the image.
std::optional<ProjectedGaussian> project_gaussian(const DdrGaussian& g, const Camera& cam, double exposure_time,
                                                  const ToneMapper& tone_mapper, double sh_bias, int sh_degree,
                                                  const RasterConfig& cfg = {});

struct DualImage {
  RenderedImage hdr;
  RenderedImage ldr;
};

/// Everything the backward pass needs: O(N_p + H*W) memory.
struct ForwardPass {
  DualImage images;
  Camera camera;
  double exposure_time = 1.0;
  RasterConfig config;
  int sh_degree = 0;
  std::vector<ProjectedGaussian> projected;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> tile_lists;  // indices into `projected`, depth order
  std::vector<double> final_transmittance;             // per pixel
  std::vector<std::uint32_t> n_processed;              // per pixel, prefix of its tile list consumed
};

/// Per-gaussian statistics for density control, indexed by source gaussian.
struct ViewspaceStats {
  std::vector<double> mean2d_grad_norm;  // |dL/d mean2d| in NDC units (pixel gradient * size / 2)
  std::vector<char> visible;
};

ForwardPass render_forward(const DdrScene& scene, const Camera& cam, double exposure_time,
                           const RasterConfig& cfg = {});

/// HDR and LDR renders from a single shared geometry pass.
DualImage rasterize_dual(const DdrScene& scene, const Camera& cam, double exposure_time,
                         const RasterConfig& cfg = {});

GradientSet render_backward(const ForwardPass& fwd, const DdrScene& scene, const Image& upstream_hdr,
                            const Image& upstream_ldr, ViewspaceStats* stats = nullptr);

/// Recomputes the forward pass, then differentiates both colour passes jointly.
GradientSet rasterize_dual_backward(const DdrScene& scene, const Camera& cam, double exposure_time,
                                    const Image& upstream_hdr, const Image& upstream_ldr,
                                    const RasterConfig& cfg = {});

}  // namespace ddrgs
