#include "ddrgs/ssim.hpp"

#include <cmath>

namespace ddrgs {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

// Single-channel planar buffer.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.0) {}
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Zero-padded separable filtering with a symmetric kernel; it is its own adjoint.
Plane blur(const Plane& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  Plane tmp(in.w, in.h), out(in.w, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int xx = x + t;
        if (xx >= 0 && xx < in.w) s += k[t + r] * in(xx, y);
      }
      tmp(x, y) = s;
    }
  }
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int yy = y + t;
        if (yy >= 0 && yy < in.h) s += k[t + r] * tmp(x, yy);
      }
      out(x, y) = s;
    }
  }
  return out;
}

Plane channel(const Image& img, int c) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p(x, y) = img.at(x, y, c);
  return p;
}

double ssim_impl(const Image& a, const Image& b, const SsimParams& p, double upstream, Image* grad) {
  require_same_shape(a, b, "ssim");
  if (a.pixel_count() == 0) throw StructuralError("ssim: empty image");
  const auto k = gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  const double inv_n = 1.0 / static_cast<double>(a.size());
  const int w = a.width, h = a.height;
  double total = 0.0;
  if (grad) *grad = Image(w, h);

  for (int c = 0; c < 3; ++c) {
    const Plane x = channel(a, c), y = channel(b, c);
    Plane xx(w, h), yy(w, h), xy(w, h);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      xx.v[i] = x.v[i] * x.v[i];
      yy.v[i] = y.v[i] * y.v[i];
      xy.v[i] = x.v[i] * y.v[i];
    }
    const Plane mx = blur(x, k), my = blur(y, k), mxx = blur(xx, k), myy = blur(yy, k), mxy = blur(xy, k);

    Plane da(w, h), db(w, h), dc(w, h);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      const double ux = mx.v[i], uy = my.v[i];
      const double sxx = mxx.v[i] - ux * ux, syy = myy.v[i] - uy * uy, sxy = mxy.v[i] - ux * uy;
      const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * sxy + c2;
      const double b1 = ux * ux + uy * uy + c1, b2 = sxx + syy + c2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (!grad) continue;
      // Partials with respect to the raw moments E[x], E[x^2], E[xy].
      const double g = upstream * inv_n;
      const double d_mx = (2.0 * uy * a2 - 2.0 * uy * a1) / (b1 * b2) - s * 2.0 * ux / b1 + s * 2.0 * ux / b2;
      da.v[i] = g * d_mx;
      db.v[i] = g * (-s / b2);
      dc.v[i] = g * (2.0 * a1 / (b1 * b2));
    }
    if (!grad) continue;
    const Plane ga = blur(da, k), gb = blur(db, k), gc = blur(dc, k);
    for (int yy_ = 0; yy_ < h; ++yy_) {
      for (int xx_ = 0; xx_ < w; ++xx_) {
        grad->at(xx_, yy_, c) = ga(xx_, yy_) + 2.0 * x(xx_, yy_) * gb(xx_, yy_) + y(xx_, yy_) * gc(xx_, yy_);
      }
    }
  }
  return total * inv_n;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p) { return ssim_impl(a, b, p, 0.0, nullptr); }

double ssim_with_grad(const Image& a, const Image& b, double upstream, Image& grad_a, const SsimParams& p) {
  return ssim_impl(a, b, p, upstream, &grad_a);
}

}  // namespace ddrgs
