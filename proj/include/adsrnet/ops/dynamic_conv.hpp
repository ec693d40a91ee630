#pragma once

#include <cstdint>
#include <vector>

#include "adsrnet/ops/conv2d.hpp"

namespace adsrnet {

/// Linear warm-down for the attention softmax temperature: tau_start at
/// step 0, tau_end from anneal_steps onward. High early temperature keeps
/// the K kernels near-uniformly mixed so all of them receive gradient.
struct TemperatureSchedule {
  double tau_start = 30.0;
  double tau_end = 1.0;
  std::int64_t anneal_steps = 1;
};

inline double temperature_at(std::int64_t step, const TemperatureSchedule& s) {
  if (step < 0) throw std::invalid_argument("temperature_at: step must be >= 0");
  if (s.anneal_steps < 1) {
    throw std::invalid_argument("temperature_at: anneal_steps must be >= 1");
  }
  if (!(s.tau_start > 0.0) || !(s.tau_end > 0.0)) {
    throw std::invalid_argument("temperature_at: temperatures must be positive");
  }
  if (step >= s.anneal_steps) return s.tau_end;
  double frac = static_cast<double>(step) / static_cast<double>(s.anneal_steps);
  return s.tau_start + (s.tau_end - s.tau_start) * frac;
}

/// Convolution with a per-item aggregated kernel. pi is (N,K,1,1) with
/// each row a probability vector (produced upstream by the attention
/// branch); item n is convolved with W_hat_n = sum_k pi[n,k] * W_k and
/// bias b_hat_n = sum_k pi[n,k] * b_k. Gradients flow to x, pi and every
/// candidate kernel/bias:
///   gW_hat_n = up_n x cols_n^T          (per-item kernel gradient)
///   gW_k += pi[n,k] * gW_hat_n          gb_k += pi[n,k] * gb_hat_n
///   gpi[n,k] = <gW_hat_n, W_k> + <gb_hat_n, b_k>
///   gx_n = col2im(W_hat_n^T x up_n)
template <typename T>
TensorT<T> dynamic_conv_aggregate(const TensorT<T>& x, const TensorT<T>& pi,
                                  const std::vector<TensorT<T>>& weights,
                                  const std::vector<TensorT<T>>& biases,
                                  const ConvSpec& spec) {
  spec.validate();
  const Shape4& sx = x.shape();
  const Shape4& sp = pi.shape();
  std::int64_t kcount = static_cast<std::int64_t>(weights.size());
  if (kcount < 1 || biases.size() != weights.size()) {
    throw std::invalid_argument("dynamic_conv_aggregate: need K >= 1 kernels with biases");
  }
  if (sp.n != sx.n || sp.c != kcount || sp.h != 1 || sp.w != 1) {
    throw std::invalid_argument(detail::str_cat(
        "dynamic_conv_aggregate: attention shape ", sp.str(), " does not match batch ",
        sx.n, " and K ", kcount));
  }
  if (sx.c != spec.in_channels) {
    throw std::invalid_argument(detail::str_cat(
        "dynamic_conv_aggregate: input has ", sx.c, " channels, spec expects ",
        spec.in_channels));
  }
  for (std::int64_t k = 0; k < kcount; ++k) {
    if (!(weights[k].shape() == spec.weight_shape()) ||
        !(biases[k].shape() == spec.bias_shape())) {
      throw std::invalid_argument(detail::str_cat(
          "dynamic_conv_aggregate: kernel ", k, " shape mismatch"));
    }
  }

  std::int64_t batch = sx.n, cin = sx.c, h = sx.h, w = sx.w;
  std::int64_t cout = spec.out_channels, dil = spec.dilation;
  std::int64_t wsize = cout * cin * 9;
  TensorT<T> out(Shape4(batch, cout, h, w));

  std::vector<T> w_hat(static_cast<std::size_t>(wsize));
  std::vector<T> b_hat(static_cast<std::size_t>(cout));
  std::vector<T> cols;
  if (conv_backend() == ConvBackend::kFast) {
    cols.resize(static_cast<std::size_t>(cin * 9 * h * w));
  }
  for (std::int64_t n = 0; n < batch; ++n) {
    const T* prow = pi.data() + n * kcount;
    for (std::int64_t i = 0; i < wsize; ++i) w_hat[static_cast<std::size_t>(i)] = T(0);
    for (std::int64_t i = 0; i < cout; ++i) b_hat[static_cast<std::size_t>(i)] = T(0);
    for (std::int64_t k = 0; k < kcount; ++k) {
      T a = prow[k];
      const T* wk = weights[static_cast<std::size_t>(k)].data();
      const T* bk = biases[static_cast<std::size_t>(k)].data();
      for (std::int64_t i = 0; i < wsize; ++i) w_hat[static_cast<std::size_t>(i)] += a * wk[i];
      for (std::int64_t i = 0; i < cout; ++i) b_hat[static_cast<std::size_t>(i)] += a * bk[i];
    }
    if (conv_backend() == ConvBackend::kFast) {
      detail::conv_item_fast(x.data() + n * cin * h * w, w_hat.data(), b_hat.data(),
                             cin, cout, h, w, dil, cols.data(),
                             out.data() + n * cout * h * w);
    } else {
      detail::conv_item_reference(x.data() + n * cin * h * w, w_hat.data(),
                                  b_hat.data(), cin, cout, h, w, dil,
                                  out.data() + n * cout * h * w);
    }
  }

  std::vector<const TensorT<T>*> all_inputs{&x, &pi};
  for (const auto& t : weights) all_inputs.push_back(&t);
  for (const auto& t : biases) all_inputs.push_back(&t);
  GradientTape<T>* tape = GradientTape<T>::current();
  bool tracked = false;
  if (tape) {
    for (const TensorT<T>* t : all_inputs) tracked = tracked || tape->tracked(*t);
  }
  if (tape && tracked) {
    GradTarget<T> tx = tape->target(x);
    GradTarget<T> tp = tape->target(pi);
    std::vector<GradTarget<T>> tw, tb;
    std::vector<std::shared_ptr<std::vector<T>>> wstore, bstore;
    for (std::int64_t k = 0; k < kcount; ++k) {
      tw.push_back(tape->target(weights[static_cast<std::size_t>(k)]));
      tb.push_back(tape->target(biases[static_cast<std::size_t>(k)]));
      wstore.push_back(weights[static_cast<std::size_t>(k)].storage());
      bstore.push_back(biases[static_cast<std::size_t>(k)].storage());
    }
    auto xs = x.storage();
    auto ps = pi.storage();
    tape->record(out, [tx, tp, tw, tb, xs, ps, wstore, bstore, batch, cin, cout, h, w,
                       dil, kcount, wsize](const T* up, GradSink<T>& sink) {
      std::int64_t kdim = cin * 9, p = h * w;
      T* gx = sink.accum_ptr(tx);
      T* gpi = sink.accum_ptr(tp);
      std::vector<T*> gw(static_cast<std::size_t>(kcount), nullptr);
      std::vector<T*> gb(static_cast<std::size_t>(kcount), nullptr);
      bool any_gw = false, any_gb = false;
      for (std::int64_t k = 0; k < kcount; ++k) {
        gw[static_cast<std::size_t>(k)] = sink.accum_ptr(tw[static_cast<std::size_t>(k)]);
        gb[static_cast<std::size_t>(k)] = sink.accum_ptr(tb[static_cast<std::size_t>(k)]);
        any_gw = any_gw || gw[static_cast<std::size_t>(k)];
        any_gb = any_gb || gb[static_cast<std::size_t>(k)];
      }

      std::vector<T> cols(static_cast<std::size_t>(kdim * p));
      std::vector<T> gw_hat(static_cast<std::size_t>(wsize));
      std::vector<T> gb_hat(static_cast<std::size_t>(cout));
      std::vector<T> w_hat(static_cast<std::size_t>(wsize));

      for (std::int64_t n = 0; n < batch; ++n) {
        const T* up_n = up + n * cout * p;
        const T* prow = ps->data() + n * kcount;

        for (std::int64_t co = 0; co < cout; ++co) {
          const T* row = up_n + co * p;
          T acc = 0;
          for (std::int64_t i = 0; i < p; ++i) acc += row[i];
          gb_hat[static_cast<std::size_t>(co)] = acc;
        }
        if (any_gb) {
          for (std::int64_t k = 0; k < kcount; ++k) {
            if (!gb[static_cast<std::size_t>(k)]) continue;
            for (std::int64_t co = 0; co < cout; ++co) {
              gb[static_cast<std::size_t>(k)][co] += prow[k] * gb_hat[static_cast<std::size_t>(co)];
            }
          }
        }

        if (any_gw || gpi) {
          detail::im2col_3x3(xs->data() + n * cin * p, cin, h, w, dil, cols.data());
          Eigen::Map<const detail::MatRM<T>> um(up_n, cout, p);
          Eigen::Map<const detail::MatRM<T>> cm(cols.data(), kdim, p);
          Eigen::Map<detail::MatRM<T>> gwh(gw_hat.data(), cout, kdim);
          gwh.noalias() = um * cm.transpose();
          for (std::int64_t k = 0; k < kcount; ++k) {
            const T* wk = wstore[static_cast<std::size_t>(k)]->data();
            if (gw[static_cast<std::size_t>(k)]) {
              T a = prow[k];
              T* dst = gw[static_cast<std::size_t>(k)];
              for (std::int64_t i = 0; i < wsize; ++i) {
                dst[i] += a * gw_hat[static_cast<std::size_t>(i)];
              }
            }
            if (gpi) {
              T acc = 0;
              for (std::int64_t i = 0; i < wsize; ++i) {
                acc += gw_hat[static_cast<std::size_t>(i)] * wk[i];
              }
              const T* bk = bstore[static_cast<std::size_t>(k)]->data();
              for (std::int64_t co = 0; co < cout; ++co) {
                acc += gb_hat[static_cast<std::size_t>(co)] * bk[co];
              }
              gpi[n * kcount + k] += acc;
            }
          }
        }

        if (gx) {
          for (std::int64_t i = 0; i < wsize; ++i) w_hat[static_cast<std::size_t>(i)] = T(0);
          for (std::int64_t k = 0; k < kcount; ++k) {
            T a = prow[k];
            const T* wk = wstore[static_cast<std::size_t>(k)]->data();
            for (std::int64_t i = 0; i < wsize; ++i) {
              w_hat[static_cast<std::size_t>(i)] += a * wk[i];
            }
          }
          Eigen::Map<const detail::MatRM<T>> um(up_n, cout, p);
          Eigen::Map<const detail::MatRM<T>> whm(w_hat.data(), cout, kdim);
          Eigen::Map<detail::MatRM<T>> gcm(cols.data(), kdim, p);
          gcm.noalias() = whm.transpose() * um;
          detail::col2im_3x3_add(cols.data(), cin, h, w, dil, gx + n * cin * p);
        }
      }
    });
  }
  return out;
}

}  // namespace adsrnet
