#pragma once

#include <cstdint>

#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape("add", a, b);
  TensorT<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];

  if (auto* tape = tape_for<T>({&a, &b})) {
    GradTarget<T> ta = tape->target(a);
    GradTarget<T> tb = tape->target(b);
    tape->record(out, [ta, tb, n](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(ta)) {
        for (std::int64_t i = 0; i < n; ++i) g[i] += up[i];
      }
      if (T* g = sink.accum_ptr(tb)) {
        for (std::int64_t i = 0; i < n; ++i) g[i] += up[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape("mul", a, b);
  TensorT<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];

  if (auto* tape = tape_for<T>({&a, &b})) {
    GradTarget<T> ta = tape->target(a);
    GradTarget<T> tb = tape->target(b);
    auto sa = a.storage();
    auto sb = b.storage();
    tape->record(out, [ta, tb, sa, sb, n](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(ta)) {
        const T* other = sb->data();
        for (std::int64_t i = 0; i < n; ++i) g[i] += up[i] * other[i];
      }
      if (T* g = sink.accum_ptr(tb)) {
        const T* other = sa->data();
        for (std::int64_t i = 0; i < n; ++i) g[i] += up[i] * other[i];
      }
    });
  }
  return out;
}

// max(x, 0); the subgradient at exactly 0 is 0, so the backward mask is
// strictly (x > 0).
template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out(x.shape());
  const T* px = x.data();
  T* po = out.data();
  std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : T(0);

  if (auto* tape = tape_for<T>({&x})) {
    GradTarget<T> tx = tape->target(x);
    auto sx = x.storage();
    tape->record(out, [tx, sx, n](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tx)) {
        const T* v = sx->data();
        for (std::int64_t i = 0; i < n; ++i) {
          if (v[i] > T(0)) g[i] += up[i];
        }
      }
    });
  }
  return out;
}

// Sum of all elements, as a (1,1,1,1) tensor.
template <typename T>
TensorT<T> sum(const TensorT<T>& x) {
  TensorT<T> out(Shape4(1, 1, 1, 1));
  const T* px = x.data();
  std::int64_t n = x.numel();
  T acc = 0;
  for (std::int64_t i = 0; i < n; ++i) acc += px[i];
  out.data()[0] = acc;

  if (auto* tape = tape_for<T>({&x})) {
    GradTarget<T> tx = tape->target(x);
    tape->record(out, [tx, n](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tx)) {
        for (std::int64_t i = 0; i < n; ++i) g[i] += up[0];
      }
    });
  }
  return out;
}

// Concatenates along the channel axis; batch and spatial extents must match.
template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
  const Shape4& sa = a.shape();
  const Shape4& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument(detail::str_cat(
        "concat_channels: incompatible shapes ", sa.str(), " vs ", sb.str()));
  }
  TensorT<T> out(Shape4(sa.n, sa.c + sb.c, sa.h, sa.w));
  std::int64_t plane = sa.h * sa.w;
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::int64_t n = 0; n < sa.n; ++n) {
    T* dst = po + n * (sa.c + sb.c) * plane;
    const T* ra = pa + n * sa.c * plane;
    const T* rb = pb + n * sb.c * plane;
    for (std::int64_t i = 0; i < sa.c * plane; ++i) dst[i] = ra[i];
    for (std::int64_t i = 0; i < sb.c * plane; ++i) dst[sa.c * plane + i] = rb[i];
  }

  if (auto* tape = tape_for<T>({&a, &b})) {
    GradTarget<T> ta = tape->target(a);
    GradTarget<T> tb = tape->target(b);
    std::int64_t batch = sa.n, ca = sa.c, cb = sb.c;
    tape->record(out, [ta, tb, batch, ca, cb, plane](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(ta)) {
        for (std::int64_t n = 0; n < batch; ++n) {
          const T* src = up + n * (ca + cb) * plane;
          T* dst = g + n * ca * plane;
          for (std::int64_t i = 0; i < ca * plane; ++i) dst[i] += src[i];
        }
      }
      if (T* g = sink.accum_ptr(tb)) {
        for (std::int64_t n = 0; n < batch; ++n) {
          const T* src = up + n * (ca + cb) * plane + ca * plane;
          T* dst = g + n * cb * plane;
          for (std::int64_t i = 0; i < cb * plane; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

}  // namespace adsrnet
