#include "ddrgs/trainer.hpp"

#include "ddrgs/metrics.hpp"
#include "ddrgs/scene_init.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace ddrgs {

using nlohmann::json;

void TrainConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (iterations < 0) fail("iterations must be >= 0");
  for (double lr : {lr_position_init, lr_position_final, lr_sh, lr_opacity, lr_scale, lr_rotation, lr_tone_init,
                    lr_tone_final, lr_sh_bias}) {
    if (!(lr > 0.0) || !std::isfinite(lr)) fail("learning rates must be positive and finite");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps >= 0.0)) {
    fail("adam betas must lie in [0, 1) and eps must be >= 0");
  }
  if (densify_interval <= 0) fail("densify_interval must be positive");
  if (opacity_reset_interval < 0) fail("opacity_reset_interval must be >= 0");
  if (grad_threshold < 0.0 || percent_dense < 0.0 || max_world_scale < 0.0) fail("density thresholds must be >= 0");
  if (!(opacity_prune_threshold >= 0.0 && opacity_prune_threshold < 1.0)) fail("opacity_prune_threshold must be in [0, 1)");
  if (max_gaussians == 0) fail("max_gaussians must be positive");
  if (sh_degree < 0 || sh_degree > kMaxShDegree) fail("sh_degree must be in [0, 3]");
  if (sh_warmup < 0) fail("sh_warmup must be >= 0");
  if (tone_hidden < 1) fail("tone_hidden must be >= 1");
  if (!(initial_opacity > 0.0 && initial_opacity < 1.0)) fail("initial_opacity must be in (0, 1)");
  if (log_interval <= 0 || eval_interval < 0) fail("log_interval must be positive and eval_interval >= 0");
  for (double t : train_exposures)
    if (!(t > 0.0)) fail("train_exposures must be positive");
  try {
    loss.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON config

namespace {

template <class Fn>
void visit_fields(TrainConfig& c, Fn&& f) {
  f("iterations", c.iterations);
  f("lr_position_init", c.lr_position_init);
  f("lr_position_final", c.lr_position_final);
  f("scale_position_lr", c.scale_position_lr);
  f("lr_sh", c.lr_sh);
  f("lr_opacity", c.lr_opacity);
  f("lr_scale", c.lr_scale);
  f("lr_rotation", c.lr_rotation);
  f("lr_tone_init", c.lr_tone_init);
  f("lr_tone_final", c.lr_tone_final);
  f("lr_sh_bias", c.lr_sh_bias);
  f("densify_interval", c.densify_interval);
  f("densify_from", c.densify_from);
  f("densify_until", c.densify_until);
  f("grad_threshold", c.grad_threshold);
  f("opacity_prune_threshold", c.opacity_prune_threshold);
  f("max_gaussians", c.max_gaussians);
  f("opacity_reset_interval", c.opacity_reset_interval);
  f("percent_dense", c.percent_dense);
  f("max_world_scale", c.max_world_scale);
  f("sh_degree", c.sh_degree);
  f("sh_warmup", c.sh_warmup);
  f("tone_hidden", c.tone_hidden);
  f("initial_opacity", c.initial_opacity);
  f("random_cube_fallback", c.random_cube_fallback);
  f("train_exposures", c.train_exposures);
  f("seed", c.seed);
  f("log_interval", c.log_interval);
  f("eval_interval", c.eval_interval);
  f("record_elapsed", c.record_elapsed);
}

template <class Fn>
void visit_adam(AdamConfig& a, Fn&& f) {
  f("beta1", a.beta1);
  f("beta2", a.beta2);
  f("eps", a.eps);
}

template <class Fn>
void visit_loss(LossConfig& l, Fn&& f) {
  f("lambda_dssim", l.lambda_dssim);
  f("gamma_hdr", l.gamma_hdr);
  f("mu", l.mu);
  f("norm_epsilon", l.norm_epsilon);
}

}  // namespace

std::string train_config_to_json(const TrainConfig& cfg) {
  TrainConfig c = cfg;
  json j;
  visit_fields(c, [&](const char* k, auto& v) { j[k] = v; });
  visit_adam(c.adam, [&](const char* k, auto& v) { j["adam"][k] = v; });
  visit_loss(c.loss, [&](const char* k, auto& v) { j["loss"][k] = v; });
  j["loss"]["normalization"] = c.loss.normalization == HdrNormalization::global ? "global" : "per_channel";
  j["tone_domain"] = c.tone_domain == ToneDomain::log ? "log" : "linear";
  return j.dump(2);
}

void apply_train_config_json(TrainConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const auto apply = [](const json& obj, const std::string& where, auto&& visitor) {
    std::set<std::string> known;
    visitor([&](const char* k, auto& v) {
      known.insert(k);
      if (!obj.contains(k)) return;
      try {
        obj.at(k).get_to(v);
      } catch (const json::exception&) {
        throw ConfigError("config: field '" + where + k + "' has the wrong type");
      }
    });
    return known;
  };
  auto known = apply(j, "", [&](auto&& f) { visit_fields(cfg, f); });
  known.insert({"adam", "loss", "tone_domain"});
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("config: unknown field '" + k + "'");
  if (j.contains("adam")) {
    const auto ka = apply(j["adam"], "adam.", [&](auto&& f) { visit_adam(cfg.adam, f); });
    for (const auto& [k, _] : j["adam"].items())
      if (!ka.count(k)) throw ConfigError("config: unknown field 'adam." + k + "'");
  }
  if (j.contains("loss")) {
    auto kl = apply(j["loss"], "loss.", [&](auto&& f) { visit_loss(cfg.loss, f); });
    kl.insert("normalization");
    for (const auto& [k, _] : j["loss"].items())
      if (!kl.count(k)) throw ConfigError("config: unknown field 'loss." + k + "'");
    if (j["loss"].contains("normalization")) {
      const auto n = j["loss"]["normalization"];
      if (n == "global") cfg.loss.normalization = HdrNormalization::global;
      else if (n == "per_channel") cfg.loss.normalization = HdrNormalization::per_channel;
      else throw ConfigError("config: loss.normalization must be \"global\" or \"per_channel\"");
    }
  }
  if (j.contains("tone_domain")) {
    const auto d = j["tone_domain"];
    if (d == "log") cfg.tone_domain = ToneDomain::log;
    else if (d == "linear") cfg.tone_domain = ToneDomain::linear;
    else throw ConfigError("config: tone_domain must be \"log\" or \"linear\"");
  }
}

// ---------------------------------------------------------------------------
// Density control

void GradAccumulator::reset(std::size_t n) {
  sum.assign(n, 0.0);
  count.assign(n, 0);
}

void GradAccumulator::add(const ViewspaceStats& stats) {
  if (stats.visible.size() != sum.size()) throw StructuralError("GradAccumulator: stats size differs from scene");
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (!stats.visible[i]) continue;
    sum[i] += stats.mean2d_grad_norm[i];
    ++count[i];
  }
}

namespace {

// Rebuilds per-gaussian moments: entry k of the new scene copies old entry
// source[k], or starts from zero when source[k] < 0.
void remap_moments(GradientSet& g, const std::vector<std::ptrdiff_t>& source, const DdrScene& scene) {
  GradientSet fresh = GradientSet::zeros_like(scene);
  for (std::size_t k = 0; k < source.size(); ++k)
    if (source[k] >= 0) fresh.gaussians[k] = g.gaussians[static_cast<std::size_t>(source[k])];
  fresh.tone_mapper = std::move(g.tone_mapper);
  fresh.sh_bias = g.sh_bias;
  g = std::move(fresh);
}

}  // namespace

DensityReport density_control(DdrScene& scene, const GradAccumulator& grads, const DensityParams& p,
                              std::mt19937_64& rng, AdamState* adam) {
  const std::size_t n = scene.size();
  if (grads.sum.size() != n || grads.count.size() != n) {
    throw StructuralError("density_control: gradient statistics do not match the scene");
  }
  DensityReport rep;

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i)
    if (grads.count[i] > 0 && grads.mean(i) >= p.grad_threshold && p.grad_threshold >= 0.0) cand.push_back(i);
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return grads.mean(a) > grads.mean(b); });
  std::size_t budget = p.max_gaussians > n ? p.max_gaussians - n : 0;
  enum Action : char { keep, clone, split };
  std::vector<char> action(n, keep);
  for (std::size_t i : cand) {
    if (budget == 0) break;
    action[i] = scene.gaussians[i].scale().maxCoeff() <= p.clone_scale ? clone : split;
    --budget;
  }

  std::vector<DdrGaussian> out;
  std::vector<std::ptrdiff_t> source;
  out.reserve(n + cand.size() * 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (action[i] == split) continue;
    out.push_back(scene.gaussians[i]);
    source.push_back(static_cast<std::ptrdiff_t>(i));
  }
  const double shrink = std::log(1.6);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const DdrGaussian& g = scene.gaussians[i];
    if (action[i] == clone) {
      out.push_back(g);
      source.push_back(-1);
      ++rep.cloned;
    } else if (action[i] == split) {
      const Mat3 r = quaternion_to_rotation(g.rotation);
      const Vec3 s = g.scale();
      for (int c = 0; c < 2; ++c) {
        DdrGaussian child = g;
        const Vec3 z(n01(rng) * s.x(), n01(rng) * s.y(), n01(rng) * s.z());
        child.position = g.position + r * z;
        child.log_scale = g.log_scale.array() - shrink;
        out.push_back(std::move(child));
        source.push_back(-1);
      }
      ++rep.split;
    }
  }

  std::vector<DdrGaussian> kept;
  std::vector<std::ptrdiff_t> kept_source;
  kept.reserve(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const bool transparent = out[k].opacity() < p.opacity_prune_threshold;
    const bool oversized = p.max_world_scale > 0.0 && out[k].scale().maxCoeff() > p.max_world_scale;
    if (transparent || oversized) {
      ++rep.pruned;
      continue;
    }
    kept.push_back(std::move(out[k]));
    kept_source.push_back(source[k]);
  }
  scene.gaussians = std::move(kept);
  if (adam) {
    remap_moments(adam->m, kept_source, scene);
    remap_moments(adam->v, kept_source, scene);
  }
  return rep;
}

void reset_opacity(DdrScene& scene, double ceiling, AdamState* adam) {
  const double cap = logit(ceiling);
  for (auto& g : scene.gaussians) g.opacity_logit = std::min(g.opacity_logit, cap);
  if (adam) {
    for (auto& g : adam->m.gaussians) g.opacity_logit = 0.0;
    for (auto& g : adam->v.gaussians) g.opacity_logit = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Loop

std::string LogRecord::to_json() const {
  const auto opt = [](const std::optional<double>& v) {
    return v && std::isfinite(*v) ? json(*v) : json(nullptr);
  };
  json j;
  j["iter"] = iter;
  j["loss_p"] = loss_p;
  j["loss_c"] = loss_c;
  j["psnr_ldr"] = opt(psnr_ldr);
  j["psnr_hdr"] = opt(psnr_hdr);
  j["n_gaussians"] = n_gaussians;
  j["elapsed_s"] = opt(elapsed_s);
  return j.dump();
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

double default_gamma_hdr(const Dataset& data) {
  const auto train_views = data.manifest.indices(Split::train);
  if (train_views.empty()) return 0.0;
  for (std::size_t i : train_views)
    if (i >= data.hdr.size() || !data.hdr[i]) return 0.0;
  return 0.6;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks,
                  std::optional<DdrScene> initial) {
  cfg.validate();
  const auto& m = data.manifest;
  m.validate();
  const auto warn = [&](const std::string& msg) {
    if (hooks.warn) hooks.warn(msg);
  };

  std::vector<std::size_t> train_views;
  for (std::size_t i : m.indices(Split::train)) {
    const double t = m.views[i].exposure_time;
    if (cfg.train_exposures.empty() ||
        std::find(cfg.train_exposures.begin(), cfg.train_exposures.end(), t) != cfg.train_exposures.end()) {
      train_views.push_back(i);
    }
  }
  for (double t : cfg.train_exposures) {
    const bool present = std::any_of(train_views.begin(), train_views.end(),
                                     [&](std::size_t i) { return m.views[i].exposure_time == t; });
    if (!present) throw ConfigError("train: no training view has exposure " + std::to_string(t));
  }
  if (train_views.empty()) throw ConfigError("train: no training views");
  if (data.ldr.size() != m.views.size()) throw ConfigError("train: dataset images do not match the manifest");
  if (cfg.loss.gamma_hdr > 0.0) {
    for (std::size_t i : train_views) {
      if (i >= data.hdr.size() || !data.hdr[i]) {
        throw ConfigError("train: gamma_hdr > 0 needs an HDR target for training view '" + m.views[i].name + "'");
      }
    }
  }
  std::set<double> distinct;
  for (std::size_t i : train_views) distinct.insert(m.views[i].exposure_time);
  if (distinct.size() < 2) {
    warn("training uses a single exposure time; the HDR radiance is not identifiable and HDR renders "
         "will be unreliable");
  }

  TrainResult res;
  if (initial) {
    res.scene = std::move(*initial);
  } else {
    InitOptions io;
    io.sh_degree = cfg.sh_degree;
    io.tone_hidden = cfg.tone_hidden;
    io.initial_opacity = cfg.initial_opacity;
    io.seed = cfg.seed;
    io.random_cube_fallback = cfg.random_cube_fallback;
    res.scene = init_scene(m, io);
  }
  DdrScene& scene = res.scene;
  scene.validate();

  const double extent = camera_extent(m);
  const double pos_scale = cfg.scale_position_lr ? extent : 1.0;
  AdamState adam = AdamState::for_scene(scene);
  GradAccumulator acc;
  acc.reset(scene.size());
  std::mt19937_64 view_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 density_rng(cfg.seed + 17);
  std::uniform_int_distribution<std::size_t> pick(0, train_views.size() - 1);

  EvalOptions eval_opt;
  eval_opt.raster.tone_domain = cfg.tone_domain;
  eval_opt.mu = cfg.loss.mu;
  eval_opt.normalization = cfg.loss.normalization;
  eval_opt.norm_epsilon = cfg.loss.norm_epsilon;
  const bool have_test = !m.indices(Split::test).empty();

  const auto t0 = std::chrono::steady_clock::now();
  res.loss_history.reserve(static_cast<std::size_t>(cfg.iterations));
  for (long it = 1; it <= cfg.iterations; ++it) {
    RasterConfig raster;
    raster.tone_domain = cfg.tone_domain;
    raster.active_sh_degree =
        cfg.sh_warmup > 0 ? static_cast<int>(std::min<long>(scene.sh_degree, (it - 1) / cfg.sh_warmup)) : scene.sh_degree;

    const std::size_t vi = train_views[pick(view_rng)];
    ViewTarget target{m.camera(vi), &data.ldr[vi], cfg.loss.gamma_hdr > 0.0 ? &*data.hdr[vi] : nullptr};
    LossTotal lt = loss_total(scene, std::span<const ViewTarget>(&target, 1), cfg.loss, raster, true);
    res.loss_history.push_back(lt.photometric);

    LearningRates lr;
    lr[ParamClass::position] = lr_schedule(it - 1, cfg.lr_position_init, cfg.lr_position_final, cfg.iterations) * pos_scale;
    lr[ParamClass::rotation] = cfg.lr_rotation;
    lr[ParamClass::log_scale] = cfg.lr_scale;
    lr[ParamClass::opacity] = cfg.lr_opacity;
    lr[ParamClass::sh] = cfg.lr_sh;
    lr[ParamClass::tone_mapper] = lr_schedule(it - 1, cfg.lr_tone_init, cfg.lr_tone_final, cfg.iterations);
    lr[ParamClass::sh_bias] = cfg.lr_sh_bias;
    adam_step(scene, lt.grads, adam, lr, cfg.adam, it);

    if (it < cfg.densify_until) {
      for (const auto& s : lt.stats) acc.add(s);
      if (it > cfg.densify_from && it % cfg.densify_interval == 0) {
        DensityParams dp;
        dp.grad_threshold = cfg.grad_threshold;
        dp.opacity_prune_threshold = cfg.opacity_prune_threshold;
        dp.max_gaussians = cfg.max_gaussians;
        dp.clone_scale = cfg.percent_dense * extent;
        dp.max_world_scale =
            (cfg.opacity_reset_interval > 0 && it > cfg.opacity_reset_interval) ? cfg.max_world_scale * extent : 0.0;
        const DensityReport r = density_control(scene, acc, dp, density_rng, &adam);
        res.density.cloned += r.cloned;
        res.density.split += r.split;
        res.density.pruned += r.pruned;
        acc.reset(scene.size());
        if (scene.gaussians.empty()) throw NumericalError("train: density control removed every gaussian at iteration " + std::to_string(it));
      }
      if (cfg.opacity_reset_interval > 0 && it % cfg.opacity_reset_interval == 0) reset_opacity(scene, 0.01, &adam);
    }

    const bool last = it == cfg.iterations;
    if (it % cfg.log_interval == 0 || last) {
      LogRecord rec;
      rec.iter = it;
      rec.loss_p = lt.photometric;
      rec.loss_c = lt.hdr_constraint;
      rec.n_gaussians = scene.size();
      if (have_test && (last || (cfg.eval_interval > 0 && it % cfg.eval_interval == 0))) {
        const SplitReport rep = evaluate_split(scene, data, Split::test, eval_opt);
        double sum = 0.0;
        std::size_t cnt = 0;
        for (ViewGroup g : {ViewGroup::ldr_oe, ViewGroup::ldr_ne}) {
          if (const auto* r = rep.find(g)) {
            sum += r->psnr_mean * static_cast<double>(r->n_views);
            cnt += r->n_views;
          }
        }
        if (cnt) rec.psnr_ldr = sum / static_cast<double>(cnt);
        if (const auto* r = rep.find(ViewGroup::hdr)) rec.psnr_hdr = r->psnr_mean;
      }
      if (cfg.record_elapsed) {
        rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      if (hooks.on_log) hooks.on_log(rec);
      res.log.push_back(rec);
    }
  }

  if (cfg.iterations >= 1000) {
    const std::size_t w = 500;
    std::vector<double> head(res.loss_history.begin(), res.loss_history.begin() + w);
    std::vector<double> tail(res.loss_history.end() - w, res.loss_history.end());
    if (!(median(head) > median(tail))) warn("photometric loss did not decrease over the run");
  }
  return res;
}

}  // namespace ddrgs
