#pragma once

#include "ddrgs/tone_mapper.hpp"

#include <functional>

namespace ddrgs {

/// clip(x, 0, 1)^(1/gamma): the closed-form response used by the fixtures.
double gamma_crf(double exposure_product, double gamma = 2.2);

using Crf = std::function<double(double)>;  // radiance * exposure time -> [0, 1]

/// Rectangle in (log radiance, log exposure time).
struct LogExposureDomain {
  double log_radiance_min = -5.3;   // ln 0.005
  double log_radiance_max = 2.3;    // ln 10
  double log_time_min = -2.08;      // ln 0.125
  double log_time_max = 3.47;       // ln 32
};

enum class CrfFitLoss { cross_entropy, squared };

struct CrfFitOptions {
  LogExposureDomain domain;
  int grid = 16;                  // grid x grid training pairs
  int iterations = 8000;
  double lr_init = 3e-2;
  double lr_final = 1e-4;
  ToneDomain tone_domain = ToneDomain::log;
  CrfFitLoss loss = CrfFitLoss::cross_entropy;
};

struct CrfFitResult {
  double final_loss = 0.0;        // mean squared error on the training grid
  double train_max_error = 0.0;
};

/// Standalone supervised fit of every channel of `tm` to `crf` by full-batch Adam.
CrfFitResult fit_tone_mapper(ToneMapper& tm, const Crf& crf, const CrfFitOptions& opt = {});

/// Max abs error over an n x n grid of nodes at (i + 1/2) / n along each axis.
/// Training nodes sit at i / (grid - 1); for n == grid the grids are disjoint.
double crf_max_error(const ToneMapper& tm, const Crf& crf, const LogExposureDomain& domain, int n,
                     ToneDomain tone_domain = ToneDomain::log);

}  // namespace ddrgs
