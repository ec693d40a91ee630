#pragma once

#include <cmath>
#include <cstdint>

#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

// Mean absolute error over every element. The subgradient w.r.t. pred is
// sign(pred - target)/count, taken as 0 where the two are exactly equal.
template <typename T>
TensorT<T> mae_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  check_same_shape("mae_loss", pred, target);
  std::int64_t n = pred.numel();
  const T* pp = pred.data();
  const T* pt = target.data();
  T acc = 0;
  for (std::int64_t i = 0; i < n; ++i) acc += std::abs(pp[i] - pt[i]);
  TensorT<T> out = TensorT<T>::scalar(acc / static_cast<T>(n));

  if (auto* tape = tape_for<T>({&pred, &target})) {
    GradTarget<T> tp = tape->target(pred);
    GradTarget<T> tt = tape->target(target);
    auto sp = pred.storage();
    auto st = target.storage();
    tape->record(out, [tp, tt, sp, st, n](const T* up, GradSink<T>& sink) {
      const T* a = sp->data();
      const T* b = st->data();
      T scale = up[0] / static_cast<T>(n);
      if (T* g = sink.accum_ptr(tp)) {
        for (std::int64_t i = 0; i < n; ++i) {
          if (a[i] > b[i]) g[i] += scale;
          else if (a[i] < b[i]) g[i] -= scale;
        }
      }
      if (T* g = sink.accum_ptr(tt)) {
        for (std::int64_t i = 0; i < n; ++i) {
          if (a[i] > b[i]) g[i] -= scale;
          else if (a[i] < b[i]) g[i] += scale;
        }
      }
    });
  }
  return out;
}

}  // namespace adsrnet
