#include "ddrgs/rasterizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace ddrgs {

namespace {

int effective_degree(const DdrScene& scene, const RasterConfig& cfg) {
  return cfg.active_sh_degree < 0 ? scene.sh_degree : std::min(cfg.active_sh_degree, scene.sh_degree);
}

// Inclusive range of pixel indices whose centres (i + 0.5) lie within
// `extent` of `center` along one axis, clipped to [0, size).
std::pair<int, int> pixel_span(double center, double extent, int size) {
  // Slightly conservative so rounding never drops a boundary pixel.
  const double e = extent + 1e-6;
  const double lo = std::ceil(center - e - 0.5);
  const double hi = std::floor(center + e - 0.5);
  const int a = static_cast<int>(std::max(lo, 0.0));
  const int b = static_cast<int>(std::min(hi, static_cast<double>(size - 1)));
  return {a, b};
}

struct SplatSample {
  double sigma = 0.0;
  double power = 0.0;
  bool clamped = false;
};

// Shared per-pixel splat evaluation. Returns false when the splat does not
// contribute at this pixel.
inline bool sample_splat(const ProjectedGaussian& pg, double px, double py, const RasterConfig& cfg,
                         SplatSample& out) {
  const double dx = px - pg.pixel_center[0];
  const double dy = py - pg.pixel_center[1];
  const double power = -0.5 * (pg.conic[0] * dx * dx + pg.conic[2] * dy * dy) - pg.conic[1] * dx * dy;
  if (power > 0.0 || power < pg.log_alpha_cut - 1e-9) return false;
  const double raw = pg.opacity * std::exp(power);
  if (raw < cfg.min_alpha) return false;
  out.power = power;
  out.clamped = raw > cfg.max_alpha;
  out.sigma = out.clamped ? cfg.max_alpha : raw;
  return true;
}

// Gradient slots accumulated per splat in the backward blend.
struct SplatGrad {
  Vec2 mean2d = Vec2::Zero();
  Vec3 conic = Vec3::Zero();  // d/da, d/db (single off-diagonal parameter), d/dc
  double opacity = 0.0;
  Vec3 hdr = Vec3::Zero();
  Vec3 ldr = Vec3::Zero();

  SplatGrad& operator+=(const SplatGrad& o) {
    mean2d += o.mean2d;
    conic += o.conic;
    opacity += o.opacity;
    hdr += o.hdr;
    ldr += o.ldr;
    return *this;
  }
};

}  // namespace

double gaussian_density(const Vec3& x, const Vec3& mu, const Mat3& cov) {
  const Eigen::LDLT<Mat3> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericalError("gaussian_density: covariance is not positive definite");
  }
  const Vec3 d = x - mu;
  const double q = d.dot(ldlt.solve(d));
  if (!std::isfinite(q)) throw NumericalError("gaussian_density: singular covariance");
  return std::exp(-0.5 * q);
}

std::optional<ProjectedGaussian> project_gaussian(const DdrGaussian& g, const Camera& cam, double exposure_time,
                                                  const ToneMapper& tone_mapper, double sh_bias, int sh_degree,
                                                  const RasterConfig& cfg) {
  const Mat3 w = cam.rotation();
  const Vec3 t = w * g.position + cam.translation();
  if (!(t.z() > cfg.near_plane)) return std::nullopt;

  const double alpha = sigmoid(g.opacity_logit);
  if (alpha < cfg.min_alpha) return std::nullopt;

  ProjectedGaussian pg;
  pg.cam_point = t;
  pg.view_depth = t.z();
  pg.opacity = alpha;

  const double fx = cam.fx(), fy = cam.fy();
  const double iz = 1.0 / t.z();
  pg.pixel_center = {fx * t.x() * iz + cam.cx(), fy * t.y() * iz + cam.cy()};

  Mat23 j;
  j << fx * iz, 0.0, -fx * t.x() * iz * iz,  //
      0.0, fy * iz, -fy * t.y() * iz * iz;
  const Mat23 m = j * w;
  Mat2 cov2 = m * build_covariance(g.rotation, g.log_scale) * m.transpose();
  cov2(1, 0) = cov2(0, 1);
  cov2(0, 0) += cfg.low_pass;
  cov2(1, 1) += cfg.low_pass;
  const double det = cov2(0, 0) * cov2(1, 1) - cov2(0, 1) * cov2(0, 1);
  if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
  pg.cov2d = cov2;
  pg.conic = {cov2(1, 1) / det, -cov2(0, 1) / det, cov2(0, 0) / det};

  pg.log_alpha_cut = std::log(cfg.min_alpha / alpha);
  const double q_max = -2.0 * pg.log_alpha_cut;
  pg.extent = {std::sqrt(q_max * cov2(0, 0)), std::sqrt(q_max * cov2(1, 1))};

  if (cfg.cull) {
    const auto [x0, x1] = pixel_span(pg.pixel_center[0], pg.extent[0], cam.width);
    const auto [y0, y1] = pixel_span(pg.pixel_center[1], pg.extent[1], cam.height);
    if (x0 > x1 || y0 > y1) return std::nullopt;
  }

  const Vec3 v = g.position - cam.position();
  pg.view_dist = v.norm();
  pg.view_dir = v / pg.view_dist;
  const auto basis = sh_basis(pg.view_dir, sh_degree);
  const int n = sh_coeff_count(sh_degree);
  Vec3 s = Vec3::Zero();
  for (int k = 0; k < n; ++k) s += basis[k] * g.sh_coeffs[k];
  pg.sh_sum = s;
  pg.hdr_color = s.array().exp();
  if (cfg.tone_domain == ToneDomain::log) {
    pg.tone_input = s.array() + (std::log(exposure_time) + sh_bias);
  } else {
    pg.tone_input = pg.hdr_color * exposure_time;
  }
  pg.ldr_color = tone_mapper.apply(pg.tone_input);
  return pg;
}

ForwardPass render_forward(const DdrScene& scene, const Camera& cam, double exposure_time, const RasterConfig& cfg) {
  if (!(exposure_time > 0.0) || !std::isfinite(exposure_time)) {
    throw DomainError("render: exposure_time must be finite and > 0, got " + std::to_string(exposure_time));
  }
  if (cfg.tile_size <= 0) throw StructuralError("render: tile_size must be positive");
  cam.validate();

  ForwardPass fwd;
  fwd.camera = cam;
  fwd.exposure_time = exposure_time;
  fwd.config = cfg;
  fwd.sh_degree = effective_degree(scene, cfg);

  const auto n = static_cast<std::ptrdiff_t>(scene.gaussians.size());
  std::vector<std::optional<ProjectedGaussian>> slots(scene.gaussians.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slots[i] = project_gaussian(scene.gaussians[i], cam, exposure_time, scene.tone_mapper, scene.sh_bias,
                                fwd.sh_degree, cfg);
    if (slots[i]) slots[i]->source_index = static_cast<std::size_t>(i);
  }
  for (auto& s : slots) {
    if (s) fwd.projected.push_back(std::move(*s));
  }

  // Depth order, ties by source index; every tile list inherits it.
  std::vector<std::uint32_t> order(fwd.projected.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& pa = fwd.projected[a];
    const auto& pb = fwd.projected[b];
    if (pa.view_depth != pb.view_depth) return pa.view_depth < pb.view_depth;
    return pa.source_index < pb.source_index;
  });

  const int ts = cfg.tile_size;
  const int width = cam.width, height = cam.height;
  fwd.tiles_x = (width + ts - 1) / ts;
  fwd.tiles_y = (height + ts - 1) / ts;
  fwd.tile_lists.assign(static_cast<std::size_t>(fwd.tiles_x) * fwd.tiles_y, {});
  for (const auto idx : order) {
    const auto& pg = fwd.projected[idx];
    int tx0 = 0, tx1 = fwd.tiles_x - 1, ty0 = 0, ty1 = fwd.tiles_y - 1;
    if (cfg.cull) {
      const auto [x0, x1] = pixel_span(pg.pixel_center[0], pg.extent[0], width);
      const auto [y0, y1] = pixel_span(pg.pixel_center[1], pg.extent[1], height);
      tx0 = x0 / ts, tx1 = x1 / ts, ty0 = y0 / ts, ty1 = y1 / ts;
    }
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) fwd.tile_lists[static_cast<std::size_t>(ty) * fwd.tiles_x + tx].push_back(idx);
    }
  }

  Image hdr(width, height), ldr(width, height);
  fwd.final_transmittance.assign(static_cast<std::size_t>(width) * height, 1.0);
  fwd.n_processed.assign(static_cast<std::size_t>(width) * height, 0u);
  const Vec3 bg = scene.background;
  const auto n_tiles = static_cast<std::ptrdiff_t>(fwd.tile_lists.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t tile = 0; tile < n_tiles; ++tile) {
    const auto& list = fwd.tile_lists[tile];
    const int tx = static_cast<int>(tile % fwd.tiles_x), ty = static_cast<int>(tile / fwd.tiles_x);
    const int x_end = std::min(width, (tx + 1) * ts), y_end = std::min(height, (ty + 1) * ts);
    for (int y = ty * ts; y < y_end; ++y) {
      for (int x = tx * ts; x < x_end; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double t = 1.0;
        Vec3 ch = Vec3::Zero(), cl = Vec3::Zero();
        std::uint32_t processed = 0;
        SplatSample s;
        for (std::uint32_t k = 0; k < list.size(); ++k) {
          const auto& pg = fwd.projected[list[k]];
          if (!sample_splat(pg, px, py, cfg, s)) continue;
          const double w = s.sigma * t;
          ch += w * pg.hdr_color;
          cl += w * pg.ldr_color;
          t *= 1.0 - s.sigma;
          processed = k + 1;
          if (t < cfg.min_transmittance) break;
        }
        const std::size_t p = static_cast<std::size_t>(y) * width + x;
        fwd.final_transmittance[p] = t;
        fwd.n_processed[p] = processed;
        for (int c = 0; c < 3; ++c) {
          hdr.data[p * 3 + c] = std::max(0.0, ch[c] + t * bg[c]);
          ldr.data[p * 3 + c] = std::clamp(cl[c] + t * bg[c], 0.0, 1.0);
        }
      }
    }
  }

  fwd.images.hdr = {std::move(hdr), DynamicRange::hdr, std::nullopt, cam.id};
  fwd.images.ldr = {std::move(ldr), DynamicRange::ldr, exposure_time, cam.id};
  return fwd;
}

DualImage rasterize_dual(const DdrScene& scene, const Camera& cam, double exposure_time, const RasterConfig& cfg) {
  return std::move(render_forward(scene, cam, exposure_time, cfg).images);
}

GradientSet render_backward(const ForwardPass& fwd, const DdrScene& scene, const Image& upstream_hdr,
                            const Image& upstream_ldr, ViewspaceStats* stats) {
  const Camera& cam = fwd.camera;
  const RasterConfig& cfg = fwd.config;
  const int width = cam.width, height = cam.height;
  if (upstream_hdr.width != width || upstream_hdr.height != height || upstream_ldr.width != width ||
      upstream_ldr.height != height) {
    throw StructuralError("render_backward: upstream raster size does not match the camera");
  }

  GradientSet grads = GradientSet::zeros_like(scene);
  if (stats) {
    stats->mean2d_grad_norm.assign(scene.gaussians.size(), 0.0);
    stats->visible.assign(scene.gaussians.size(), 0);
  }
  const std::size_t n_proj = fwd.projected.size();
  if (n_proj == 0) return grads;

  // Pass 1: per-tile reverse blend. Each tile owns its partial buffer.
  const int ts = cfg.tile_size;
  const Vec3 bg = scene.background;
  const auto n_tiles = static_cast<std::ptrdiff_t>(fwd.tile_lists.size());
  std::vector<std::vector<SplatGrad>> partials(fwd.tile_lists.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t tile = 0; tile < n_tiles; ++tile) {
    const auto& list = fwd.tile_lists[tile];
    auto& part = partials[tile];
    part.assign(list.size(), SplatGrad{});
    const int tx = static_cast<int>(tile % fwd.tiles_x), ty = static_cast<int>(tile / fwd.tiles_x);
    const int x_end = std::min(width, (tx + 1) * ts), y_end = std::min(height, (ty + 1) * ts);
    for (int y = ty * ts; y < y_end; ++y) {
      for (int x = tx * ts; x < x_end; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * width + x;
        const Vec3 gh(upstream_hdr.data[p * 3], upstream_hdr.data[p * 3 + 1], upstream_hdr.data[p * 3 + 2]);
        const Vec3 gl(upstream_ldr.data[p * 3], upstream_ldr.data[p * 3 + 1], upstream_ldr.data[p * 3 + 2]);
        if (gh.isZero(0.0) && gl.isZero(0.0)) continue;
        const double px = x + 0.5, py = y + 0.5;
        double t_after = fwd.final_transmittance[p];
        Vec3 rest_h = t_after * bg, rest_l = t_after * bg;
        SplatSample s;
        for (std::uint32_t k = fwd.n_processed[p]; k-- > 0;) {
          const auto& pg = fwd.projected[list[k]];
          if (!sample_splat(pg, px, py, cfg, s)) continue;
          const double one_minus = 1.0 - s.sigma;
          const double t = t_after / one_minus;
          auto& sg = part[k];
          sg.hdr += (s.sigma * t) * gh;
          sg.ldr += (s.sigma * t) * gl;
          const double d_sigma = gh.dot(pg.hdr_color * t - rest_h / one_minus) +
                                 gl.dot(pg.ldr_color * t - rest_l / one_minus);
          rest_h += (s.sigma * t) * pg.hdr_color;
          rest_l += (s.sigma * t) * pg.ldr_color;
          t_after = t;
          if (s.clamped) continue;
          const double g = s.sigma / pg.opacity;  // exp(power)
          sg.opacity += d_sigma * g;
          const double d_power = d_sigma * s.sigma;
          const double dx = px - pg.pixel_center[0];
          const double dy = py - pg.pixel_center[1];
          sg.conic[0] += -0.5 * dx * dx * d_power;
          sg.conic[1] += -dx * dy * d_power;
          sg.conic[2] += -0.5 * dy * dy * d_power;
          sg.mean2d[0] += (pg.conic[0] * dx + pg.conic[1] * dy) * d_power;
          sg.mean2d[1] += (pg.conic[1] * dx + pg.conic[2] * dy) * d_power;
        }
      }
    }
  }

  // Pass 2: fixed-order reduction over tiles.
  std::vector<SplatGrad> acc(n_proj);
  for (std::size_t tile = 0; tile < fwd.tile_lists.size(); ++tile) {
    const auto& list = fwd.tile_lists[tile];
    for (std::size_t k = 0; k < list.size(); ++k) acc[list[k]] += partials[tile][k];
  }

  // Pass 3: per-splat chain rule back to the 3D parameters. Tone-mapper
  // cotangents are reduced over fixed-size chunks, then chunks in order.
  const Mat3 w = cam.rotation();
  const double fx = cam.fx(), fy = cam.fy();
  const int degree = fwd.sh_degree;
  const int n_coeffs = sh_coeff_count(degree);
  constexpr std::size_t kChunk = 64;
  const std::size_t n_chunks = (n_proj + kChunk - 1) / kChunk;
  std::vector<ToneMapper> tone_parts(n_chunks, scene.tone_mapper.zeros_like());
  std::vector<double> bias_parts(n_chunks, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t chunk = 0; chunk < static_cast<std::ptrdiff_t>(n_chunks); ++chunk) {
    auto& tone_grad = tone_parts[chunk];
    const std::size_t end = std::min(n_proj, (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) {
      const auto& pg = fwd.projected[i];
      const auto& sg = acc[i];
      const auto& src = scene.gaussians[pg.source_index];
      auto& out = grads.gaussians[pg.source_index];

      // Colours.
      Vec3 d_tone_in;
      for (int c = 0; c < 3; ++c) {
        d_tone_in[c] = scene.tone_mapper.channels[c].backward(pg.tone_input[c], sg.ldr[c], tone_grad.channels[c]);
      }
      Vec3 d_hdr = sg.hdr;
      Vec3 d_sh_sum;
      if (cfg.tone_domain == ToneDomain::log) {
        d_sh_sum = d_hdr.cwiseProduct(pg.hdr_color) + d_tone_in;
        if (scene.sh_bias_learnable) bias_parts[chunk] += d_tone_in.sum();
      } else {
        d_hdr += fwd.exposure_time * d_tone_in;
        d_sh_sum = d_hdr.cwiseProduct(pg.hdr_color);
      }
      const auto basis = sh_basis(pg.view_dir, degree);
      Vec3 d_dir = Vec3::Zero();
      const auto basis_grad = degree > 0 ? sh_basis_gradient(pg.view_dir, degree) : std::array<Vec3, kMaxShCoeffs>{};
      for (int k = 0; k < n_coeffs; ++k) {
        out.sh_coeffs[k] += basis[k] * d_sh_sum;
        if (degree > 0) d_dir += d_sh_sum.dot(src.sh_coeffs[k]) * basis_grad[k];
      }
      Vec3 d_pos = Vec3::Zero();
      if (degree > 0) {
        const Vec3& dir = pg.view_dir;
        d_pos += (d_dir - dir * dir.dot(d_dir)) / pg.view_dist;
      }

      // Opacity.
      out.opacity_logit += sg.opacity * pg.opacity * (1.0 - pg.opacity);

      // Conic -> 2D covariance: dSigma2 = -C G C with G the full-matrix cotangent.
      Mat2 conic_m;
      conic_m << pg.conic[0], pg.conic[1], pg.conic[1], pg.conic[2];
      Mat2 g_conic;
      g_conic << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
      const Mat2 g_cov2 = -conic_m * g_conic * conic_m;

      // 2D covariance -> 3D covariance and the projection Jacobian.
      const Vec3& t = pg.cam_point;
      const double iz = 1.0 / t.z();
      Mat23 j;
      j << fx * iz, 0.0, -fx * t.x() * iz * iz,  //
          0.0, fy * iz, -fy * t.y() * iz * iz;
      const Mat23 m = j * w;
      const Mat3 cov3 = build_covariance(src.rotation, src.log_scale);
      const Mat3 g_cov3 = m.transpose() * g_cov2 * m;
      const Mat23 g_m = 2.0 * g_cov2 * m * cov3;
      const Mat23 g_j = g_m * w.transpose();

      Vec4 d_rot;
      Vec3 d_log_scale;
      build_covariance_backward(src.rotation, src.log_scale, g_cov3, d_rot, d_log_scale);
      out.rotation += d_rot;
      out.log_scale += d_log_scale;

      // Camera-space point from the Jacobian and from the projected centre.
      Vec3 d_t = Vec3::Zero();
      const double iz2 = iz * iz, iz3 = iz2 * iz;
      d_t.x() += g_j(0, 2) * (-fx * iz2);
      d_t.y() += g_j(1, 2) * (-fy * iz2);
      d_t.z() += g_j(0, 0) * (-fx * iz2) + g_j(0, 2) * (2.0 * fx * t.x() * iz3) + g_j(1, 1) * (-fy * iz2) +
                 g_j(1, 2) * (2.0 * fy * t.y() * iz3);
      d_t.x() += sg.mean2d[0] * fx * iz;
      d_t.y() += sg.mean2d[1] * fy * iz;
      d_t.z() += -sg.mean2d[0] * fx * t.x() * iz2 - sg.mean2d[1] * fy * t.y() * iz2;
      d_pos += w.transpose() * d_t;
      out.position += d_pos;

      if (stats) {
        const double gx = sg.mean2d[0] * 0.5 * width, gy = sg.mean2d[1] * 0.5 * height;
        stats->mean2d_grad_norm[pg.source_index] = std::sqrt(gx * gx + gy * gy);
        stats->visible[pg.source_index] = 1;
      }
    }
  }

  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (int ch = 0; ch < 3; ++ch) {
      auto& dst = grads.tone_mapper.channels[ch];
      const auto& src = tone_parts[c].channels[ch];
      dst.w1 += src.w1;
      dst.b1 += src.b1;
      dst.w2 += src.w2;
      dst.b2 += src.b2;
    }
    grads.sh_bias += bias_parts[c];
  }
  return grads;
}

GradientSet rasterize_dual_backward(const DdrScene& scene, const Camera& cam, double exposure_time,
                                    const Image& upstream_hdr, const Image& upstream_ldr, const RasterConfig& cfg) {
  const ForwardPass fwd = render_forward(scene, cam, exposure_time, cfg);
  return render_backward(fwd, scene, upstream_hdr, upstream_ldr);
}

}  // namespace ddrgs
