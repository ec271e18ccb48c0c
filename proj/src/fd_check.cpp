#include "ddrgs/fd_check.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace ddrgs {

std::vector<ParamClass> FdReport::failing_classes() const {
  std::vector<ParamClass> out;
  for (const auto& c : classes)
    if (c.failed > 0) out.push_back(c.cls);
  return out;
}

std::string FdReport::to_text() const {
  std::ostringstream os;
  os << "finite-difference check: " << (passed ? "PASS" : "FAIL") << " (" << checked << " parameters, tolerance "
     << tolerance << ")\n";
  char line[256];
  std::snprintf(line, sizeof line, "  %-12s %8s %8s %14s\n", "class", "checked", "failed", "max_rel_err");
  os << line;
  for (const auto& c : classes) {
    std::snprintf(line, sizeof line, "  %-12s %8d %8d %14.3e", std::string(to_string(c.cls)).c_str(), c.checked, c.failed,
                  c.max_rel_error);
    os << line;
    if (c.failed > 0) {
      std::snprintf(line, sizeof line, "   worst: gaussian %td slot %zu analytic %.9g numeric %.9g", c.worst_gaussian,
                    c.worst_offset, c.worst_analytic, c.worst_numeric);
      os << line;
    }
    os << '\n';
  }
  return os.str();
}

std::string FdReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed;
  j["checked"] = checked;
  j["tolerance"] = tolerance;
  j["classes"] = nlohmann::json::array();
  for (const auto& c : classes) {
    j["classes"].push_back({{"class", std::string(to_string(c.cls))},
                            {"checked", c.checked},
                            {"failed", c.failed},
                            {"max_rel_error", c.max_rel_error},
                            {"worst", {{"gaussian", c.worst_gaussian},
                                       {"offset", c.worst_offset},
                                       {"analytic", c.worst_analytic},
                                       {"numeric", c.worst_numeric}}}});
  }
  return j.dump(2);
}

namespace {

struct Slot {
  ParamClass cls;
  std::ptrdiff_t gaussian;
  std::size_t offset;
  double* value;
  double analytic;
};

}  // namespace

FdReport finite_difference_check(const DdrScene& scene, const SceneLoss& loss, const GradientSet& analytic,
                                 const FdOptions& opt) {
  if (!analytic.congruent_with(scene)) throw StructuralError("finite_difference_check: gradient shape mismatch");
  DdrScene work = scene;

  std::vector<std::span<double>> param_blocks;
  std::vector<std::tuple<ParamClass, std::ptrdiff_t>> tags;
  for_each_param_block(work, [&](ParamClass c, std::ptrdiff_t g, std::span<double> s) {
    param_blocks.push_back(s);
    tags.emplace_back(c, g);
  });
  std::vector<std::span<const double>> grad_blocks;
  for_each_param_block(analytic, [&](ParamClass, std::ptrdiff_t, std::span<const double> s) { grad_blocks.push_back(s); });

  std::map<ParamClass, std::vector<Slot>> by_class;
  for (std::size_t b = 0; b < param_blocks.size(); ++b) {
    const auto [cls, g] = tags[b];
    if (cls == ParamClass::sh_bias && !scene.sh_bias_learnable) continue;
    for (std::size_t k = 0; k < param_blocks[b].size(); ++k) {
      by_class[cls].push_back({cls, g, k, &param_blocks[b][k], grad_blocks[b][k]});
    }
  }

  // Equal quota per class, topped up from the leftovers to reach min_samples.
  std::mt19937_64 rng(opt.seed);
  std::vector<Slot> chosen, leftover;
  const std::size_t quota = by_class.empty() ? 0 : (opt.min_samples + by_class.size() - 1) / by_class.size();
  for (auto& [cls, slots] : by_class) {
    std::shuffle(slots.begin(), slots.end(), rng);
    const std::size_t take = std::min(quota, slots.size());
    chosen.insert(chosen.end(), slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(take));
    leftover.insert(leftover.end(), slots.begin() + static_cast<std::ptrdiff_t>(take), slots.end());
  }
  std::shuffle(leftover.begin(), leftover.end(), rng);
  for (const auto& s : leftover) {
    if (chosen.size() >= static_cast<std::size_t>(opt.min_samples)) break;
    chosen.push_back(s);
  }

  FdReport report;
  report.tolerance = opt.tolerance;
  std::map<ParamClass, FdClassReport> per_class;
  for (const auto& s : chosen) {
    const double orig = *s.value;
    const auto central = [&](double h) {
      *s.value = orig + h;
      const double lp = loss(work);
      *s.value = orig - h;
      const double lm = loss(work);
      *s.value = orig;
      return (lp - lm) / (2.0 * h);
    };
    // The loss is only piecewise smooth (ReLU in the tone mapper, the alpha
    // cutoff, the HDR min/max). A stencil that straddles a kink estimates a
    // chord, not the derivative; shrink the step until two successive
    // estimates agree, so the stencil lies on one smooth piece.
    double h = opt.step;
    double numeric = central(h);
    while (opt.refine_steps && h / 10.0 >= opt.min_step) {
      const double finer = central(h / 10.0);
      const double scale = std::max(std::abs(numeric), std::abs(finer));
      const bool settled = std::abs(finer - numeric) <= 0.1 * (opt.tolerance * scale + opt.atol);
      h /= 10.0;
      numeric = finer;
      if (settled) break;
    }
    const double err = std::abs(s.analytic - numeric);
    const double rel = err / (std::max(std::abs(s.analytic), std::abs(numeric)) + opt.atol / opt.tolerance);

    auto& r = per_class[s.cls];
    r.cls = s.cls;
    ++r.checked;
    const bool ok = err <= opt.tolerance * std::max(std::abs(s.analytic), std::abs(numeric)) + opt.atol;
    if (!ok) ++r.failed;
    if (rel >= r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_gaussian = s.gaussian;
      r.worst_offset = s.offset;
      r.worst_analytic = s.analytic;
      r.worst_numeric = numeric;
    }
    ++report.checked;
  }
  for (ParamClass c : kAllParamClasses) {
    if (auto it = per_class.find(c); it != per_class.end()) {
      report.passed = report.passed && it->second.failed == 0;
      report.classes.push_back(it->second);
    }
  }
  return report;
}

FdReport finite_difference_check(const DdrScene& scene, std::span<const ViewTarget> batch, const LossConfig& cfg,
                                 const RasterConfig& raster, const FdOptions& opt) {
  const LossTotal analytic = loss_total(scene, batch, cfg, raster, true);
  const SceneLoss loss = [&](const DdrScene& s) { return loss_total(s, batch, cfg, raster, false).total; };
  return finite_difference_check(scene, loss, analytic.grads, opt);
}

std::vector<ViewTarget> FdProblem::batch() const {
  std::vector<ViewTarget> out;
  for (std::size_t v = 0; v < cameras.size(); ++v) out.push_back({cameras[v], &ldr[v], &hdr[v]});
  return out;
}

FdProblem make_fd_problem(int n_gaussians, int size, std::uint64_t seed, int sh_degree, int n_views) {
  if (n_gaussians < 1 || size < 1 || n_views < 1) throw ConfigError("make_fd_problem: sizes must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.6, 0.6), ls(std::log(0.08), std::log(0.25)), op(-1.5, 1.5),
      dc(-1.0, 1.5), unit(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0), hi(0.0, 0.3);

  FdProblem p;
  p.scene.sh_degree = sh_degree;
  p.scene.sh_bias_learnable = true;
  p.scene.tone_mapper = ToneMapper::random(8, rng);
  for (int i = 0; i < n_gaussians; ++i) {
    DdrGaussian g;
    g.position = {pos(rng), pos(rng), pos(rng)};
    g.rotation = Vec4(n01(rng), n01(rng), n01(rng), n01(rng)).normalized();
    g.log_scale = {ls(rng), ls(rng), ls(rng)};
    g.opacity_logit = op(rng);
    g.sh_coeffs.assign(sh_coeff_count(sh_degree), Vec3::Zero());
    g.sh_coeffs[0] = {dc(rng), dc(rng), dc(rng)};
    for (std::size_t k = 1; k < g.sh_coeffs.size(); ++k) g.sh_coeffs[k] = {hi(rng), hi(rng), hi(rng)};
    p.scene.gaussians.push_back(std::move(g));
  }
  const double f = 0.5 * size / std::tan(25.0 * std::numbers::pi / 180.0);
  for (int v = 0; v < n_views; ++v) {
    const double a = 0.7 * v;
    Camera cam;
    cam.width = cam.height = size;
    cam.intrinsics = Camera::pinhole(f, f, 0.5 * size, 0.5 * size);
    cam.extrinsics = look_at(Vec3(2.0 * std::sin(a), 0.3, -4.0 * std::cos(a)), Vec3::Zero(), Vec3(0.0, 1.0, 0.0));
    cam.exposure_time = 0.5 * (v + 1);
    cam.id = "fd" + std::to_string(v);
    p.cameras.push_back(cam);
    Image l(size, size), h(size, size);
    for (double& x : l.data) x = unit(rng);
    for (double& x : h.data) x = 3.0 * unit(rng);
    p.ldr.push_back(std::move(l));
    p.hdr.push_back(std::move(h));
  }
  return p;
}

}  // namespace ddrgs
