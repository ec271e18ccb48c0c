#pragma once

#include "ddrgs/dataset.hpp"
#include "ddrgs/losses.hpp"

#include <string>
#include <vector>

namespace ddrgs {

/// 10 log10(peak^2 / MSE). Identical images give +infinity.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct ImageScores {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Both rasters min-max normalized, mu-law compressed, then scored.
ImageScores evaluate_hdr(const Image& rendered, const Image& target, double mu = 5000.0,
                         HdrNormalization mode = HdrNormalization::global, double eps = 1e-8);

/// Plain PSNR / SSIM of an LDR render against its target.
ImageScores evaluate_ldr(const Image& rendered, const Image& target);

enum class ViewGroup { ldr_oe, ldr_ne, hdr };
std::string_view to_string(ViewGroup g);

struct GroupReport {
  ViewGroup group = ViewGroup::ldr_oe;
  std::size_t n_views = 0;
  double psnr_mean = 0.0;  // +inf when every view is perfect (or any view is)
  double ssim_mean = 0.0;
};

struct SplitReport {
  Split split = Split::test;
  std::vector<GroupReport> groups;  // only non-empty groups, in OE, NE, HDR order

  [[nodiscard]] const GroupReport* find(ViewGroup g) const;
  /// {"split", "groups": [{"group", "split", "n_views", "psnr_mean", "ssim_mean"}]};
  /// an infinite PSNR is written as null.
  [[nodiscard]] std::string to_json() const;
};

/// Aligned text table over one or more splits ("inf" for infinite PSNR).
std::string format_report_table(const std::vector<SplitReport>& reports);
std::string format_report_json(const std::vector<SplitReport>& reports);

struct EvalOptions {
  RasterConfig raster;
  double mu = 5000.0;
  HdrNormalization normalization = HdrNormalization::global;
  double norm_epsilon = 1e-8;
};

/// Renders every view of `split`. LDR views whose exposure is in the manifest's
/// exposure set count as LDR-OE, the rest as LDR-NE. Each distinct HDR target
/// is scored once in the HDR group.
SplitReport evaluate_split(const DdrScene& scene, const Dataset& data, Split split, const EvalOptions& opt = {});

}  // namespace ddrgs
