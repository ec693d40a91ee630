#pragma once

#include <cmath>
#include <cstdint>

#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

// Per-channel spatial mean: (N,C,H,W) -> (N,C,1,1).
template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& x) {
  const Shape4& s = x.shape();
  TensorT<T> out(Shape4(s.n, s.c, 1, 1));
  std::int64_t plane = s.h * s.w;
  const T* px = x.data();
  T* po = out.data();
  for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
    T acc = 0;
    const T* row = px + nc * plane;
    for (std::int64_t i = 0; i < plane; ++i) acc += row[i];
    po[nc] = acc / static_cast<T>(plane);
  }

  if (auto* tape = tape_for<T>({&x})) {
    GradTarget<T> tx = tape->target(x);
    std::int64_t rows = s.n * s.c;
    tape->record(out, [tx, rows, plane](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tx)) {
        for (std::int64_t nc = 0; nc < rows; ++nc) {
          T share = up[nc] / static_cast<T>(plane);
          T* row = g + nc * plane;
          for (std::int64_t i = 0; i < plane; ++i) row[i] += share;
        }
      }
    });
  }
  return out;
}

// Affine map per batch item: (N,Cin,1,1) x (Cout,Cin,1,1) + (Cout,1,1,1)
// -> (N,Cout,1,1).
template <typename T>
TensorT<T> fully_connected(const TensorT<T>& x, const TensorT<T>& weight,
                           const TensorT<T>& bias) {
  const Shape4& sx = x.shape();
  const Shape4& sw = weight.shape();
  const Shape4& sb = bias.shape();
  if (sx.h != 1 || sx.w != 1) {
    throw std::invalid_argument(detail::str_cat(
        "fully_connected: input must be (N,C,1,1), got ", sx.str()));
  }
  if (sw.h != 1 || sw.w != 1 || sw.c != sx.c) {
    throw std::invalid_argument(detail::str_cat(
        "fully_connected: weight ", sw.str(), " does not match input ", sx.str()));
  }
  if (!(sb == Shape4(sw.n, 1, 1, 1))) {
    throw std::invalid_argument(detail::str_cat(
        "fully_connected: bias ", sb.str(), " does not match weight ", sw.str()));
  }

  std::int64_t batch = sx.n, cin = sx.c, cout = sw.n;
  TensorT<T> out(Shape4(batch, cout, 1, 1));
  const T* px = x.data();
  const T* pw = weight.data();
  const T* pb = bias.data();
  T* po = out.data();
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t o = 0; o < cout; ++o) {
      T acc = pb[o];
      for (std::int64_t i = 0; i < cin; ++i) acc += pw[o * cin + i] * px[n * cin + i];
      po[n * cout + o] = acc;
    }
  }

  if (auto* tape = tape_for<T>({&x, &weight, &bias})) {
    GradTarget<T> tx = tape->target(x);
    GradTarget<T> tw = tape->target(weight);
    GradTarget<T> tb = tape->target(bias);
    auto sx_data = x.storage();
    auto sw_data = weight.storage();
    tape->record(out, [tx, tw, tb, sx_data, sw_data, batch, cin, cout](
                          const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tx)) {
        const T* w = sw_data->data();
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t o = 0; o < cout; ++o) {
            T u = up[n * cout + o];
            for (std::int64_t i = 0; i < cin; ++i) g[n * cin + i] += u * w[o * cin + i];
          }
        }
      }
      if (T* g = sink.accum_ptr(tw)) {
        const T* v = sx_data->data();
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t o = 0; o < cout; ++o) {
            T u = up[n * cout + o];
            for (std::int64_t i = 0; i < cin; ++i) g[o * cin + i] += u * v[n * cin + i];
          }
        }
      }
      if (T* g = sink.accum_ptr(tb)) {
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t o = 0; o < cout; ++o) g[o] += up[n * cout + o];
        }
      }
    });
  }
  return out;
}

// softmax(logits / tau) per batch item over the channel axis, with
// max-subtraction so large logits cannot overflow. Input is (N,K,1,1).
template <typename T>
TensorT<T> softmax_temperature(const TensorT<T>& logits, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument(detail::str_cat(
        "softmax_temperature: tau must be positive, got ", tau));
  }
  const Shape4& s = logits.shape();
  if (s.h != 1 || s.w != 1) {
    throw std::invalid_argument(detail::str_cat(
        "softmax_temperature: input must be (N,K,1,1), got ", s.str()));
  }

  std::int64_t batch = s.n, k = s.c;
  TensorT<T> out(s);
  const T* pl = logits.data();
  T* po = out.data();
  for (std::int64_t n = 0; n < batch; ++n) {
    const T* row = pl + n * k;
    T* prob = po + n * k;
    T m = row[0];
    for (std::int64_t i = 1; i < k; ++i) m = row[i] > m ? row[i] : m;
    T denom = 0;
    for (std::int64_t i = 0; i < k; ++i) {
      prob[i] = std::exp(static_cast<T>((row[i] - m) / static_cast<T>(tau)));
      denom += prob[i];
    }
    for (std::int64_t i = 0; i < k; ++i) prob[i] /= denom;
  }

  if (auto* tape = tape_for<T>({&logits})) {
    GradTarget<T> tl = tape->target(logits);
    auto sp = out.storage();
    tape->record(out, [tl, sp, batch, k, tau](const T* up, GradSink<T>& sink) {
      if (T* g = sink.accum_ptr(tl)) {
        const T* p = sp->data();
        for (std::int64_t n = 0; n < batch; ++n) {
          const T* prob = p + n * k;
          const T* u = up + n * k;
          T dot = 0;
          for (std::int64_t i = 0; i < k; ++i) dot += u[i] * prob[i];
          for (std::int64_t i = 0; i < k; ++i) {
            g[n * k + i] += prob[i] * (u[i] - dot) / static_cast<T>(tau);
          }
        }
      }
    });
  }
  return out;
}

}  // namespace adsrnet
