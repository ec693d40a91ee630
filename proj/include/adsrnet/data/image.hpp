#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

/// 8-bit RGB image, interleaved row-major (y, x, channel).
struct Image8 {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(std::int64_t h_, std::int64_t w_)
      : h(h_), w(w_), pixels(static_cast<std::size_t>(h_ * w_ * 3), 0) {}

  std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t c) const {
    return pixels[static_cast<std::size_t>((y * w + x) * 3 + c)];
  }
  std::uint8_t& at(std::int64_t y, std::int64_t x, std::int64_t c) {
    return pixels[static_cast<std::size_t>((y * w + x) * 3 + c)];
  }

  bool operator==(const Image8&) const = default;
};

/// Real-valued image, planar (channel, y, x), in the [0,255] domain.
/// The resampling and metric code works here to avoid quantization.
struct ImageF {
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<double> values;

  ImageF() = default;
  ImageF(std::int64_t c_, std::int64_t h_, std::int64_t w_)
      : c(c_), h(h_), w(w_), values(static_cast<std::size_t>(c_ * h_ * w_), 0.0) {}

  double at(std::int64_t ch, std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>((ch * h + y) * w + x)];
  }
  double& at(std::int64_t ch, std::int64_t y, std::int64_t x) {
    return values[static_cast<std::size_t>((ch * h + y) * w + x)];
  }
};

// Round half away from zero, the fixed convention at every 8-bit boundary.
inline std::uint8_t quantize_u8(double v) {
  double r = std::round(v);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<std::uint8_t>(r);
}

inline ImageF to_float(const Image8& img) {
  ImageF out(3, img.h, img.w);
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < img.h; ++y) {
      for (std::int64_t x = 0; x < img.w; ++x) {
        out.at(c, y, x) = static_cast<double>(img.at(y, x, c));
      }
    }
  }
  return out;
}

inline Image8 to_8bit(const ImageF& img) {
  if (img.c != 3) {
    throw std::invalid_argument(detail::str_cat(
        "to_8bit: expected 3 channels, got ", img.c));
  }
  Image8 out(img.h, img.w);
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < img.h; ++y) {
      for (std::int64_t x = 0; x < img.w; ++x) {
        out.at(y, x, c) = quantize_u8(img.at(c, y, x));
      }
    }
  }
  return out;
}

// BT.601 studio-swing luma from full-range 8-bit RGB; [16, 235] nominal.
inline std::vector<double> rgb_to_y(const Image8& img) {
  std::vector<double> y(static_cast<std::size_t>(img.h * img.w));
  for (std::int64_t i = 0; i < img.h * img.w; ++i) {
    double r = img.pixels[static_cast<std::size_t>(i * 3 + 0)];
    double g = img.pixels[static_cast<std::size_t>(i * 3 + 1)];
    double b = img.pixels[static_cast<std::size_t>(i * 3 + 2)];
    y[static_cast<std::size_t>(i)] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  }
  return y;
}

// Network-domain conversion: pixels scaled to [0,1], shape (1,3,H,W).
template <typename T>
TensorT<T> image_to_tensor(const Image8& img) {
  TensorT<T> t(Shape4(1, 3, img.h, img.w));
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < img.h; ++y) {
      for (std::int64_t x = 0; x < img.w; ++x) {
        t.at(0, c, y, x) = static_cast<T>(img.at(y, x, c)) / T(255);
      }
    }
  }
  return t;
}

template <typename T>
Image8 tensor_to_image(const TensorT<T>& t) {
  const Shape4& s = t.shape();
  if (s.n != 1 || s.c != 3) {
    throw std::invalid_argument(detail::str_cat(
        "tensor_to_image: expected shape (1,3,H,W), got ", s.str()));
  }
  Image8 out(s.h, s.w);
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < s.h; ++y) {
      for (std::int64_t x = 0; x < s.w; ++x) {
        out.at(y, x, c) = quantize_u8(static_cast<double>(t.at(0, c, y, x)) * 255.0);
      }
    }
  }
  return out;
}

}  // namespace adsrnet
