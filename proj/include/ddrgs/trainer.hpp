#pragma once

#include "ddrgs/dataset.hpp"
#include "ddrgs/losses.hpp"
#include "ddrgs/optim.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ddrgs {

struct TrainConfig {
  long iterations = 30000;
  AdamConfig adam;

  double lr_position_init = 1.6e-4;
  double lr_position_final = 1.6e-6;
  bool scale_position_lr = true;  // multiply position rates by the camera extent
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_tone_init = 5e-4;
  double lr_tone_final = 5e-5;
  double lr_sh_bias = 1e-3;  // only used when the bias is learnable

  long densify_interval = 100;
  long densify_from = 500;
  long densify_until = 15000;
  double grad_threshold = 2e-4;
  double opacity_prune_threshold = 5e-3;
  std::size_t max_gaussians = 1'000'000;
  long opacity_reset_interval = 3000;
  double percent_dense = 0.01;      // clone/split boundary, fraction of the extent
  double max_world_scale = 0.1;     // prune larger gaussians after the first reset (fraction of extent; 0 = off)

  int sh_degree = 3;
  long sh_warmup = 1000;            // iterations per SH degree
  int tone_hidden = 64;
  double initial_opacity = 0.1;
  bool random_cube_fallback = false;
  ToneDomain tone_domain = ToneDomain::log;
  LossConfig loss;

  std::vector<double> train_exposures;  // empty: every training view; else only these exposures

  std::uint64_t seed = 0;
  long log_interval = 100;
  long eval_interval = 1000;        // held-out PSNR cadence; the last iteration is always evaluated
  bool record_elapsed = true;       // false writes elapsed_s as null for byte-comparable logs

  void validate() const;
};

/// JSON object of every field (nested "adam" and "loss" objects).
std::string train_config_to_json(const TrainConfig& cfg);
/// Overrides the fields present in `json_text`; unknown keys are a ConfigError.
void apply_train_config_json(TrainConfig& cfg, const std::string& json_text);

// ---------------------------------------------------------------------------
// Adaptive density control

/// Screen-space position gradient norms summed per gaussian since the last reset.
struct GradAccumulator {
  std::vector<double> sum;
  std::vector<std::uint32_t> count;

  void reset(std::size_t n);
  void add(const ViewspaceStats& stats);
  [[nodiscard]] double mean(std::size_t i) const { return count[i] ? sum[i] / count[i] : 0.0; }
};

struct DensityParams {
  double grad_threshold = 2e-4;
  double opacity_prune_threshold = 5e-3;
  std::size_t max_gaussians = 1'000'000;
  double clone_scale = 0.0;      // world size; at or below it a gaussian is cloned, above it split
  double max_world_scale = 0.0;  // 0 disables the size prune
};

struct DensityReport {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clone / split gaussians whose mean gradient reaches the threshold (largest
/// gradients first while the budget lasts), then prune transparent or
/// oversized ones. Split children are drawn from the parent's density with
/// the scale divided by 1.6. Adam moments follow surviving gaussians; new
/// gaussians start with zero moments.
DensityReport density_control(DdrScene& scene, const GradAccumulator& grads, const DensityParams& p,
                              std::mt19937_64& rng, AdamState* adam = nullptr);

/// Caps every opacity at `ceiling` and clears the opacity moments.
void reset_opacity(DdrScene& scene, double ceiling, AdamState* adam = nullptr);

// ---------------------------------------------------------------------------
// Training loop

struct LogRecord {
  long iter = 0;
  double loss_p = 0.0;                  // photometric loss of the sampled view
  double loss_c = 0.0;                  // HDR constraint (0 when disabled)
  std::optional<double> psnr_ldr;       // held-out, at evaluation iterations
  std::optional<double> psnr_hdr;
  std::size_t n_gaussians = 0;
  std::optional<double> elapsed_s;

  [[nodiscard]] std::string to_json() const;  // one NDJSON line, no newline
};

struct TrainHooks {
  std::function<void(const std::string&)> warn;
  std::function<void(const LogRecord&)> on_log;
};

struct TrainResult {
  DdrScene scene;
  std::vector<LogRecord> log;
  std::vector<double> loss_history;  // photometric loss per iteration
  DensityReport density;             // totals over the run
};

/// 0.6 when every training view has an HDR target, else 0.
double default_gamma_hdr(const Dataset& data);

/// Initializes from the manifest's sparse points (or uses `initial`) and runs
/// the optimization. Configuration problems raise ConfigError before the
/// first iteration.
TrainResult train(const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks = {},
                  std::optional<DdrScene> initial = std::nullopt);

}  // namespace ddrgs
