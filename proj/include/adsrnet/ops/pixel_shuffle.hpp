#pragma once

#include <cstdint>

#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

// Rearranges (N, C*r^2, H, W) into (N, C, H*r, W*r):
// out[n, c, h*r+i, w*r+j] = in[n, c*r^2 + i*r + j, h, w].
// A pure permutation of elements; the gradient is the inverse gather.
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, std::int64_t r) {
  if (r < 1) throw std::invalid_argument("pixel_shuffle: r must be >= 1");
  const Shape4& s = x.shape();
  if (s.c % (r * r) != 0) {
    throw std::invalid_argument(detail::str_cat(
        "pixel_shuffle: ", s.c, " channels not divisible by r^2 = ", r * r));
  }
  std::int64_t cout = s.c / (r * r);
  TensorT<T> out(Shape4(s.n, cout, s.h * r, s.w * r));
  const T* px = x.data();
  T* po = out.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < cout; ++c) {
      for (std::int64_t i = 0; i < r; ++i) {
        for (std::int64_t j = 0; j < r; ++j) {
          const T* src = px + ((n * s.c + c * r * r + i * r + j) * s.h) * s.w;
          for (std::int64_t y = 0; y < s.h; ++y) {
            T* dst = po + ((n * cout + c) * s.h * r + y * r + i) * s.w * r + j;
            for (std::int64_t x0 = 0; x0 < s.w; ++x0) dst[x0 * r] = src[y * s.w + x0];
          }
        }
      }
    }
  }

  if (auto* tape = tape_for<T>({&x})) {
    GradTarget<T> tx = tape->target(x);
    Shape4 in_shape = s;
    tape->record(out, [tx, in_shape, r, cout](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tx)) {
        const Shape4& s = in_shape;
        for (std::int64_t n = 0; n < s.n; ++n) {
          for (std::int64_t c = 0; c < cout; ++c) {
            for (std::int64_t i = 0; i < r; ++i) {
              for (std::int64_t j = 0; j < r; ++j) {
                T* dst = g + ((n * s.c + c * r * r + i * r + j) * s.h) * s.w;
                for (std::int64_t y = 0; y < s.h; ++y) {
                  const T* src =
                      up + ((n * cout + c) * s.h * r + y * r + i) * s.w * r + j;
                  for (std::int64_t x0 = 0; x0 < s.w; ++x0) {
                    dst[y * s.w + x0] += src[x0 * r];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace adsrnet
