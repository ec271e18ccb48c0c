#include "ddrgs/metrics.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ddrgs {

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (a.data.empty()) throw StructuralError("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.data.size());
  return 10.0 * std::log10(peak * peak / mse);
}

ImageScores evaluate_ldr(const Image& rendered, const Image& target) {
  return {psnr(rendered, target), ssim(rendered, target)};
}

ImageScores evaluate_hdr(const Image& rendered, const Image& target, double mu, HdrNormalization mode, double eps) {
  require_same_shape(rendered, target, "evaluate_hdr");
  const Image r = mu_law(minmax_normalize(rendered, eps, mode), mu);
  const Image t = mu_law(minmax_normalize(target, eps, mode), mu);
  return {psnr(r, t), ssim(r, t)};
}

std::string_view to_string(ViewGroup g) {
  switch (g) {
    case ViewGroup::ldr_oe: return "LDR-OE";
    case ViewGroup::ldr_ne: return "LDR-NE";
    case ViewGroup::hdr: return "HDR";
  }
  return "?";
}

const GroupReport* SplitReport::find(ViewGroup g) const {
  for (const auto& r : groups)
    if (r.group == g) return &r;
  return nullptr;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json report_json(const SplitReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"group", std::string(to_string(g.group))},
                      {"split", std::string(to_string(r.split))},
                      {"n_views", g.n_views},
                      {"psnr_mean", number_or_null(g.psnr_mean)},
                      {"ssim_mean", number_or_null(g.ssim_mean)}});
  }
  return {{"split", std::string(to_string(r.split))}, {"groups", groups}};
}

std::string fmt(double v, const char* spec) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string SplitReport::to_json() const { return report_json(*this).dump(2); }

std::string format_report_json(const std::vector<SplitReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return nlohmann::json{{"reports", arr}}.dump(2) + "\n";
}

std::string format_report_table(const std::vector<SplitReport>& reports) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %-7s %6s %9s %7s\n", "split", "group", "views", "PSNR(dB)", "SSIM");
  os << line;
  for (const auto& r : reports) {
    if (r.groups.empty()) {
      std::snprintf(line, sizeof line, "%-6s %-7s %6d %9s %7s\n", std::string(to_string(r.split)).c_str(), "-", 0,
                    "-", "-");
      os << line;
    }
    for (const auto& g : r.groups) {
      std::snprintf(line, sizeof line, "%-6s %-7s %6zu %9s %7s\n", std::string(to_string(r.split)).c_str(),
                    std::string(to_string(g.group)).c_str(), g.n_views, fmt(g.psnr_mean, "%.2f").c_str(),
                    fmt(g.ssim_mean, "%.4f").c_str());
      os << line;
    }
  }
  return os.str();
}

SplitReport evaluate_split(const DdrScene& scene, const Dataset& data, Split split, const EvalOptions& opt) {
  const auto& m = data.manifest;
  struct Acc {
    std::size_t n = 0;
    double psnr = 0.0, ssim = 0.0;
    void add(const ImageScores& s) {
      ++n;
      psnr += s.psnr;
      ssim += s.ssim;
    }
  };
  std::map<ViewGroup, Acc> acc;
  std::set<std::string> hdr_seen;
  const std::set<double> trained(m.exposure_set.begin(), m.exposure_set.end());
  for (std::size_t i : m.indices(split)) {
    const auto& v = m.views[i];
    const Camera cam = m.camera(i);
    const DualImage r = rasterize_dual(scene, cam, v.exposure_time, opt.raster);
    acc[trained.count(v.exposure_time) ? ViewGroup::ldr_oe : ViewGroup::ldr_ne].add(
        evaluate_ldr(r.ldr.pixels, data.ldr[i]));
    if (v.hdr_image && data.hdr[i] && hdr_seen.insert(*v.hdr_image).second) {
      acc[ViewGroup::hdr].add(evaluate_hdr(r.hdr.pixels, *data.hdr[i], opt.mu, opt.normalization, opt.norm_epsilon));
    }
  }
  SplitReport out;
  out.split = split;
  for (ViewGroup g : {ViewGroup::ldr_oe, ViewGroup::ldr_ne, ViewGroup::hdr}) {
    const auto it = acc.find(g);
    if (it == acc.end()) continue;
    const double n = static_cast<double>(it->second.n);
    out.groups.push_back({g, it->second.n, it->second.psnr / n, it->second.ssim / n});
  }
  return out;
}

}  // namespace ddrgs
