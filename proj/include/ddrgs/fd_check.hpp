#pragma once

#include "ddrgs/losses.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ddrgs {

struct FdOptions {
  double step = 1e-4;
  bool refine_steps = true;  // shrink the step (down to min_step) until successive estimates agree
  double min_step = 1e-7;
  double tolerance = 1e-4;   // relative
  double atol = 1e-8;        // absolute slack for gradients that are ~0
  int min_samples = 200;
  std::uint64_t seed = 0;
};

/// Worst sampled entry of one parameter class.
struct FdClassReport {
  ParamClass cls = ParamClass::position;
  int checked = 0;
  int failed = 0;
  double max_rel_error = 0.0;
  std::ptrdiff_t worst_gaussian = -1;
  std::size_t worst_offset = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// An entry passes when |a - f| <= tolerance * max(|a|, |f|) + atol; the
/// reported relative error is |a - f| / (max(|a|, |f|) + atol / tolerance),
/// which is <= tolerance exactly when the entry passes.
struct FdReport {
  std::vector<FdClassReport> classes;
  int checked = 0;
  double tolerance = 0.0;
  bool passed = true;

  [[nodiscard]] std::vector<ParamClass> failing_classes() const;
  [[nodiscard]] std::string to_text() const;
  [[nodiscard]] std::string to_json() const;
};

using SceneLoss = std::function<double(const DdrScene&)>;

/// Central differences of `loss` on a random subset of parameters, compared
/// against the supplied analytic gradient.
FdReport finite_difference_check(const DdrScene& scene, const SceneLoss& loss, const GradientSet& analytic,
                                 const FdOptions& opt = {});

/// Same, with loss_total over `batch` supplying both sides.
FdReport finite_difference_check(const DdrScene& scene, std::span<const ViewTarget> batch, const LossConfig& cfg,
                                 const RasterConfig& raster = {}, const FdOptions& opt = {});

/// A self-contained random problem for gradient checks: a scene of
/// `n_gaussians` (SH degree `sh_degree`, learnable SH bias) in front of
/// `n_views` square cameras of side `size`, each with random LDR and HDR
/// targets at a distinct exposure.
struct FdProblem {
  DdrScene scene;
  std::vector<Camera> cameras;
  std::vector<Image> ldr;
  std::vector<Image> hdr;

  /// Views into the targets above; invalidated if the problem is moved.
  [[nodiscard]] std::vector<ViewTarget> batch() const;
};

FdProblem make_fd_problem(int n_gaussians, int size, std::uint64_t seed, int sh_degree = 3, int n_views = 2);

}  // namespace ddrgs
