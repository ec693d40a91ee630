#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adsrnet/data/image.hpp"

namespace adsrnet {

/// Single scoring plane in the [0, peak] domain.
struct Plane {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(std::int64_t h_, std::int64_t w_)
      : h(h_), w(w_), v(static_cast<std::size_t>(h_ * w_), 0.0) {}

  double at(std::int64_t y, std::int64_t x) const {
    return v[static_cast<std::size_t>(y * w + x)];
  }
  double& at(std::int64_t y, std::int64_t x) {
    return v[static_cast<std::size_t>(y * w + x)];
  }
};

inline Plane y_plane(const Image8& img) {
  Plane p(img.h, img.w);
  p.v = rgb_to_y(img);
  return p;
}

inline Plane channel_plane(const Image8& img, std::int64_t c) {
  Plane p(img.h, img.w);
  for (std::int64_t i = 0; i < img.h * img.w; ++i) {
    p.v[static_cast<std::size_t>(i)] =
        static_cast<double>(img.pixels[static_cast<std::size_t>(i * 3 + c)]);
  }
  return p;
}

inline Plane crop_border(const Plane& p, std::int64_t border) {
  if (border < 0 || 2 * border >= p.h || 2 * border >= p.w) {
    throw std::invalid_argument(detail::str_cat(
        "crop_border: border ", border, " invalid for ", p.w, "x", p.h, " plane"));
  }
  Plane out(p.h - 2 * border, p.w - 2 * border);
  for (std::int64_t y = 0; y < out.h; ++y) {
    for (std::int64_t x = 0; x < out.w; ++x) {
      out.at(y, x) = p.at(y + border, x + border);
    }
  }
  return out;
}

inline void check_same_dims(const char* op, const Plane& a, const Plane& b) {
  if (a.h != b.h || a.w != b.w) {
    throw std::invalid_argument(detail::str_cat(
        op, ": dimension mismatch ", a.w, "x", a.h, " vs ", b.w, "x", b.h));
  }
}

inline double psnr(const Plane& a, const Plane& b, double peak = 255.0) {
  check_same_dims("psnr", a, b);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    double d = a.v[i] - b.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline std::vector<double> gaussian_window_11() {
  constexpr double sigma = 1.5;
  std::vector<double> g(11);
  double total = 0.0;
  for (int i = 0; i < 11; ++i) {
    double d = static_cast<double>(i - 5);
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& x : g) x /= total;
  return g;
}

// Valid-mode separable filtering with the 11-tap window: output is
// (h-10) x (w-10) weighted local means.
inline Plane window_mean(const Plane& p, const std::vector<double>& g) {
  Plane horiz(p.h, p.w - 10);
  for (std::int64_t y = 0; y < p.h; ++y) {
    for (std::int64_t x = 0; x < horiz.w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < 11; ++t) acc += g[static_cast<std::size_t>(t)] * p.at(y, x + t);
      horiz.at(y, x) = acc;
    }
  }
  Plane out(p.h - 10, p.w - 10);
  for (std::int64_t y = 0; y < out.h; ++y) {
    for (std::int64_t x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < 11; ++t) acc += g[static_cast<std::size_t>(t)] * horiz.at(y + t, x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Mean SSIM over all fully-interior 11x11 windows, Gaussian-weighted
/// (sigma 1.5), K1 = 0.01, K2 = 0.03.
inline double ssim(const Plane& a, const Plane& b, double peak = 255.0) {
  check_same_dims("ssim", a, b);
  if (a.h < 11 || a.w < 11) {
    throw std::invalid_argument(detail::str_cat(
        "ssim: plane ", a.w, "x", a.h, " smaller than the 11x11 window"));
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  std::vector<double> g = detail::gaussian_window_11();

  Plane aa(a.h, a.w), bb(a.h, a.w), ab(a.h, a.w);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }

  Plane mu_a = detail::window_mean(a, g);
  Plane mu_b = detail::window_mean(b, g);
  Plane e_aa = detail::window_mean(aa, g);
  Plane e_bb = detail::window_mean(bb, g);
  Plane e_ab = detail::window_mean(ab, g);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    double ma = mu_a.v[i], mb = mu_b.v[i];
    double va = e_aa.v[i] - ma * ma;
    double vb = e_bb.v[i] - mb * mb;
    double cov = e_ab.v[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.v.size());
}

}  // namespace adsrnet
