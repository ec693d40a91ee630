#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "adsrnet/core/parallel.hpp"
#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

/// 3x3, stride-1 convolution description. padding must equal dilation,
/// which is exactly the size-preserving choice for a 3x3 kernel
/// (effective extent 2*dilation+1); nothing else is representable.
struct ConvSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t dilation = 1;
  std::int64_t padding = 1;

  void validate() const {
    if (in_channels <= 0 || out_channels <= 0) {
      throw std::invalid_argument("ConvSpec: channel counts must be positive");
    }
    if (dilation < 1) {
      throw std::invalid_argument("ConvSpec: dilation must be >= 1");
    }
    if (padding != dilation) {
      throw std::invalid_argument(detail::str_cat(
          "ConvSpec: padding ", padding, " != dilation ", dilation,
          " is not size-preserving for a 3x3 kernel"));
    }
  }

  Shape4 weight_shape() const { return Shape4(out_channels, in_channels, 3, 3); }
  Shape4 bias_shape() const { return Shape4(out_channels, 1, 1, 1); }
};

/// Convolution algorithm selector, switchable at runtime. kReference is
/// the plain quadruple-loop definition; kFast lowers each batch item to
/// an im2col matrix and multiplies with Eigen. Both must agree to 1e-5.
enum class ConvBackend { kReference, kFast };

namespace detail {

inline ConvBackend& conv_backend_slot() {
  static ConvBackend b = ConvBackend::kFast;
  return b;
}

// Lowers one item's (C,H,W) plane stack into a (C*9) x (H*W) row-major
// matrix for a 3x3 kernel with the given dilation and padding==dilation.
// Row k = ci*9 + u*3 + v holds input values at (y+(u-1)*d, x+(v-1)*d)
// for every output pixel (y,x), zero where that falls outside the image.
template <typename T>
void im2col_3x3(const T* x, std::int64_t c, std::int64_t h, std::int64_t w,
                std::int64_t dil, T* cols) {
  parallel_for(0, c * 9, [&](std::int64_t k_lo, std::int64_t k_hi) {
    for (std::int64_t k = k_lo; k < k_hi; ++k) {
      std::int64_t ci = k / 9;
      std::int64_t off_y = ((k / 3) % 3 - 1) * dil;
      std::int64_t off_x = (k % 3 - 1) * dil;
      const T* src = x + ci * h * w;
      T* row = cols + k * h * w;
      for (std::int64_t y = 0; y < h; ++y) {
        std::int64_t iy = y + off_y;
        T* dst = row + y * w;
        if (iy < 0 || iy >= h) {
          for (std::int64_t xx = 0; xx < w; ++xx) dst[xx] = T(0);
          continue;
        }
        const T* line = src + iy * w;
        std::int64_t x_lo = off_x < 0 ? -off_x : 0;
        std::int64_t x_hi = off_x > 0 ? w - off_x : w;
        for (std::int64_t xx = 0; xx < x_lo; ++xx) dst[xx] = T(0);
        for (std::int64_t xx = x_lo; xx < x_hi; ++xx) dst[xx] = line[xx + off_x];
        for (std::int64_t xx = x_hi; xx < w; ++xx) dst[xx] = T(0);
      }
    }
  });
}

// Inverse scatter of im2col_3x3: accumulates a (C*9) x (H*W) gradient
// matrix back onto the (C,H,W) input gradient. Parallel over channels;
// all rows of one channel are reduced by the same thread, so the
// accumulation order is independent of the thread count.
template <typename T>
void col2im_3x3_add(const T* cols, std::int64_t c, std::int64_t h, std::int64_t w,
                    std::int64_t dil, T* gx) {
  parallel_for(0, c, [&](std::int64_t c_lo, std::int64_t c_hi) {
    for (std::int64_t ci = c_lo; ci < c_hi; ++ci) {
      T* dst_plane = gx + ci * h * w;
      for (std::int64_t kk = 0; kk < 9; ++kk) {
        std::int64_t off_y = (kk / 3 - 1) * dil;
        std::int64_t off_x = (kk % 3 - 1) * dil;
        const T* row = cols + (ci * 9 + kk) * h * w;
        for (std::int64_t y = 0; y < h; ++y) {
          std::int64_t iy = y + off_y;
          if (iy < 0 || iy >= h) continue;
          std::int64_t x_lo = off_x < 0 ? -off_x : 0;
          std::int64_t x_hi = off_x > 0 ? w - off_x : w;
          const T* src = row + y * w;
          T* dst = dst_plane + iy * w + off_x;
          for (std::int64_t xx = x_lo; xx < x_hi; ++xx) dst[xx] += src[xx];
        }
      }
    }
  });
}

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One batch item of the naive definition: out[co,y,x] = b[co] +
// sum_{ci,u,v} w[co,ci,u,v] * x[ci, y+(u-1)d, x+(v-1)d].
template <typename T>
void conv_item_reference(const T* x, const T* w, const T* b, std::int64_t cin,
                         std::int64_t cout, std::int64_t h, std::int64_t ww,
                         std::int64_t dil, T* out) {
  parallel_for(0, cout, [&](std::int64_t co_lo, std::int64_t co_hi) {
    for (std::int64_t co = co_lo; co < co_hi; ++co) {
      T* plane = out + co * h * ww;
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x0 = 0; x0 < ww; ++x0) {
          T acc = b ? b[co] : T(0);
          for (std::int64_t ci = 0; ci < cin; ++ci) {
            for (std::int64_t u = 0; u < 3; ++u) {
              std::int64_t iy = y + (u - 1) * dil;
              if (iy < 0 || iy >= h) continue;
              for (std::int64_t v = 0; v < 3; ++v) {
                std::int64_t ix = x0 + (v - 1) * dil;
                if (ix < 0 || ix >= ww) continue;
                acc += w[((co * cin + ci) * 3 + u) * 3 + v] * x[(ci * h + iy) * ww + ix];
              }
            }
          }
          plane[y * ww + x0] = acc;
        }
      }
    }
  });
}

// One batch item of the lowered path: out (Cout x P) = W (Cout x K) *
// cols (K x P), then bias added per output row.
template <typename T>
void conv_item_fast(const T* x, const T* w, const T* b, std::int64_t cin,
                    std::int64_t cout, std::int64_t h, std::int64_t ww,
                    std::int64_t dil, T* cols_scratch, T* out) {
  std::int64_t k = cin * 9, p = h * ww;
  im2col_3x3(x, cin, h, ww, dil, cols_scratch);
  Eigen::Map<const MatRM<T>> wm(w, cout, k);
  Eigen::Map<const MatRM<T>> cm(cols_scratch, k, p);
  Eigen::Map<MatRM<T>> om(out, cout, p);
  om.noalias() = wm * cm;
  if (b) {
    for (std::int64_t co = 0; co < cout; ++co) {
      T* row = out + co * p;
      for (std::int64_t i = 0; i < p; ++i) row[i] += b[co];
    }
  }
}

}  // namespace detail

inline ConvBackend conv_backend() { return detail::conv_backend_slot(); }
inline void set_conv_backend(ConvBackend b) { detail::conv_backend_slot() = b; }

/// Zero-padded, stride-1, 3x3 cross-correlation with dilation; spatial
/// size is preserved (padding == dilation enforced by the spec type).
/// weight is (Cout,Cin,3,3), bias (Cout,1,1,1). Kernels are not flipped:
/// weight tap (u,v) multiplies the input at offset ((u-1)d, (v-1)d).
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvSpec& spec, const TensorT<T>& weight,
                  const TensorT<T>& bias) {
  spec.validate();
  const Shape4& sx = x.shape();
  if (sx.c != spec.in_channels) {
    throw std::invalid_argument(detail::str_cat(
        "conv2d: input has ", sx.c, " channels, spec expects ", spec.in_channels));
  }
  if (!(weight.shape() == spec.weight_shape())) {
    throw std::invalid_argument(detail::str_cat(
        "conv2d: weight shape ", weight.shape().str(), " != ",
        spec.weight_shape().str()));
  }
  if (!(bias.shape() == spec.bias_shape())) {
    throw std::invalid_argument(detail::str_cat(
        "conv2d: bias shape ", bias.shape().str(), " != ", spec.bias_shape().str()));
  }

  std::int64_t batch = sx.n, cin = sx.c, h = sx.h, w = sx.w;
  std::int64_t cout = spec.out_channels, dil = spec.dilation;
  TensorT<T> out(Shape4(batch, cout, h, w));

  if (conv_backend() == ConvBackend::kFast) {
    std::vector<T> cols(static_cast<std::size_t>(cin * 9 * h * w));
    for (std::int64_t n = 0; n < batch; ++n) {
      detail::conv_item_fast(x.data() + n * cin * h * w, weight.data(), bias.data(),
                             cin, cout, h, w, dil, cols.data(),
                             out.data() + n * cout * h * w);
    }
  } else {
    for (std::int64_t n = 0; n < batch; ++n) {
      detail::conv_item_reference(x.data() + n * cin * h * w, weight.data(),
                                  bias.data(), cin, cout, h, w, dil,
                                  out.data() + n * cout * h * w);
    }
  }

  if (auto* tape = tape_for<T>({&x, &weight, &bias})) {
    GradTarget<T> tx = tape->target(x);
    GradTarget<T> tw = tape->target(weight);
    GradTarget<T> tb = tape->target(bias);
    auto xs = x.storage();
    auto ws = weight.storage();
    tape->record(out, [tx, tw, tb, xs, ws, batch, cin, cout, h, w,
                       dil](const T* up, GradSink<T>& sink) {
      std::int64_t k = cin * 9, p = h * w;
      T* gx = sink.accum_ptr(tx);
      T* gw = sink.accum_ptr(tw);
      T* gb = sink.accum_ptr(tb);

      if (gb) {
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* row = up + (n * cout + co) * p;
            T acc = 0;
            for (std::int64_t i = 0; i < p; ++i) acc += row[i];
            gb[co] += acc;
          }
        }
      }
      if (!gx && !gw) return;

      if (conv_backend() == ConvBackend::kFast) {
        std::vector<T> cols(static_cast<std::size_t>(k * p));
        for (std::int64_t n = 0; n < batch; ++n) {
          const T* up_n = up + n * cout * p;
          Eigen::Map<const detail::MatRM<T>> um(up_n, cout, p);
          Eigen::Map<const detail::MatRM<T>> wm(ws->data(), cout, k);
          if (gw) {
            detail::im2col_3x3(xs->data() + n * cin * p, cin, h, w, dil, cols.data());
            Eigen::Map<const detail::MatRM<T>> cm(cols.data(), k, p);
            Eigen::Map<detail::MatRM<T>> gwm(gw, cout, k);
            gwm.noalias() += um * cm.transpose();
          }
          if (gx) {
            Eigen::Map<detail::MatRM<T>> gcm(cols.data(), k, p);
            gcm.noalias() = wm.transpose() * um;
            detail::col2im_3x3_add(cols.data(), cin, h, w, dil, gx + n * cin * p);
          }
        }
      } else {
        const T* xv = xs->data();
        const T* wv = ws->data();
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* urow = up + (n * cout + co) * p;
            for (std::int64_t y = 0; y < h; ++y) {
              for (std::int64_t x0 = 0; x0 < w; ++x0) {
                T u = urow[y * w + x0];
                if (u == T(0)) continue;
                for (std::int64_t ci = 0; ci < cin; ++ci) {
                  for (std::int64_t uu = 0; uu < 3; ++uu) {
                    std::int64_t iy = y + (uu - 1) * dil;
                    if (iy < 0 || iy >= h) continue;
                    for (std::int64_t vv = 0; vv < 3; ++vv) {
                      std::int64_t ix = x0 + (vv - 1) * dil;
                      if (ix < 0 || ix >= w) continue;
                      std::int64_t widx = ((co * cin + ci) * 3 + uu) * 3 + vv;
                      std::int64_t xidx = (n * cin + ci) * p + iy * w + ix;
                      if (gx) gx[xidx] += wv[widx] * u;
                      if (gw) gw[widx] += xv[xidx] * u;
                    }
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
