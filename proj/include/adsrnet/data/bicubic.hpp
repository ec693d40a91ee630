#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "adsrnet/data/image.hpp"

namespace adsrnet {

namespace detail {

// Keys cubic convolution kernel with a = -0.5; support [-2, 2], value 1
// at 0 and 0 at every other integer, so it interpolates sample points.
inline double cubic_keys(double x) {
  constexpr double a = -0.5;
  double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

// Tap plan for one axis. Output sample i draws from `taps` consecutive
// source positions (edge-clamped) with normalized weights. When
// shrinking, the kernel is stretched by the inverse scale (antialias) so
// its footprint covers the whole source span it represents.
struct ResamplePlan {
  std::int64_t taps = 0;
  std::vector<std::int64_t> index;
  std::vector<double> weight;
};

inline ResamplePlan plan_resample(std::int64_t in_len, std::int64_t out_len) {
  if (in_len < 1 || out_len < 1) {
    throw std::invalid_argument("bicubic_resize: extents must be >= 1");
  }
  double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  double kscale = scale < 1.0 ? scale : 1.0;
  double width = 4.0 / kscale;

  ResamplePlan plan;
  plan.taps = static_cast<std::int64_t>(std::ceil(width)) + 2;
  plan.index.resize(static_cast<std::size_t>(out_len * plan.taps));
  plan.weight.resize(static_cast<std::size_t>(out_len * plan.taps));

  for (std::int64_t i = 0; i < out_len; ++i) {
    // Center-aligned inverse map: output pixel centers land at
    // (i + 0.5)/scale in source units.
    double u = (static_cast<double>(i) + 0.5) / scale - 0.5;
    std::int64_t left = static_cast<std::int64_t>(std::floor(u - width / 2.0));
    double total = 0.0;
    for (std::int64_t t = 0; t < plan.taps; ++t) {
      double w = cubic_keys((u - static_cast<double>(left + t)) * kscale);
      plan.weight[static_cast<std::size_t>(i * plan.taps + t)] = w;
      total += w;
    }
    for (std::int64_t t = 0; t < plan.taps; ++t) {
      plan.weight[static_cast<std::size_t>(i * plan.taps + t)] /= total;
      std::int64_t src = left + t;
      if (src < 0) src = 0;
      if (src > in_len - 1) src = in_len - 1;
      plan.index[static_cast<std::size_t>(i * plan.taps + t)] = src;
    }
  }
  return plan;
}

}  // namespace detail

/// Separable cubic-convolution resampling (a = -0.5) with edge clamping,
/// antialiased when shrinking, channels independent. Values outside the
/// source range can appear (cubic overshoot); callers clamp at the 8-bit
/// boundary, not here.
inline ImageF bicubic_resize(const ImageF& img, std::int64_t out_h, std::int64_t out_w) {
  detail::ResamplePlan px = detail::plan_resample(img.w, out_w);
  detail::ResamplePlan py = detail::plan_resample(img.h, out_h);

  ImageF horiz(img.c, img.h, out_w);
  for (std::int64_t c = 0; c < img.c; ++c) {
    for (std::int64_t y = 0; y < img.h; ++y) {
      const double* row = img.values.data() + (c * img.h + y) * img.w;
      double* dst = horiz.values.data() + (c * img.h + y) * out_w;
      for (std::int64_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        const std::int64_t* idx = px.index.data() + x * px.taps;
        const double* wgt = px.weight.data() + x * px.taps;
        for (std::int64_t t = 0; t < px.taps; ++t) acc += wgt[t] * row[idx[t]];
        dst[x] = acc;
      }
    }
  }

  ImageF out(img.c, out_h, out_w);
  for (std::int64_t c = 0; c < img.c; ++c) {
    for (std::int64_t y = 0; y < out_h; ++y) {
      const std::int64_t* idx = py.index.data() + y * py.taps;
      const double* wgt = py.weight.data() + y * py.taps;
      double* dst = out.values.data() + (c * out_h + y) * out_w;
      for (std::int64_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::int64_t t = 0; t < py.taps; ++t) {
          acc += wgt[t] * horiz.values[(c * img.h + idx[t]) * out_w + x];
        }
        dst[x] = acc;
      }
    }
  }
  return out;
}

// Crop to scale-divisible dimensions (keeping the top-left corner), then
// shrink by exactly 1/scale and quantize back to 8-bit.
inline Image8 degrade_image(const Image8& hr, std::int64_t scale) {
  if (scale < 2) throw std::invalid_argument("degrade_image: scale must be >= 2");
  std::int64_t ch = hr.h - hr.h % scale;
  std::int64_t cw = hr.w - hr.w % scale;
  if (ch < scale || cw < scale) {
    throw std::invalid_argument(detail::str_cat(
        "degrade_image: image ", hr.w, "x", hr.h, " too small for scale ", scale));
  }
  Image8 cropped(ch, cw);
  for (std::int64_t y = 0; y < ch; ++y) {
    for (std::int64_t x = 0; x < cw; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) cropped.at(y, x, c) = hr.at(y, x, c);
    }
  }
  ImageF lr = bicubic_resize(to_float(cropped), ch / scale, cw / scale);
  return to_8bit(lr);
}

// Matching 8-bit crop used when an evaluation needs the HR side of a
// degraded pair: the degrade crop without the downscale.
inline Image8 crop_to_multiple(const Image8& img, std::int64_t scale) {
  std::int64_t ch = img.h - img.h % scale;
  std::int64_t cw = img.w - img.w % scale;
  Image8 out(ch, cw);
  for (std::int64_t y = 0; y < ch; ++y) {
    for (std::int64_t x = 0; x < cw; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, c);
    }
  }
  return out;
}

}  // namespace adsrnet
