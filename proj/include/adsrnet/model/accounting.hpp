#pragma once

#include <cstdint>

#include "adsrnet/model/config.hpp"
#include "adsrnet/model/network.hpp"

namespace adsrnet {

// Analytic parameter formulas, kept independent of the live builder so
// the two can cross-check each other.
inline std::int64_t conv_param_count(std::int64_t cin, std::int64_t cout) {
  return cin * cout * 9 + cout;
}

inline std::int64_t dense_param_count(std::int64_t in, std::int64_t out) {
  return in * out + out;
}

inline std::int64_t dynamic_param_count(std::int64_t channels, std::int64_t k) {
  std::int64_t mid = channels / kSqueezeRatio;
  return k * conv_param_count(channels, channels) +
         dense_param_count(channels, mid) + dense_param_count(mid, k);
}

inline std::int64_t hb_param_count(const ModelConfig& c) {
  std::int64_t ch = c.channels;
  std::int64_t plain = conv_param_count(ch, ch);
  switch (c.variant) {
    case Variant::kFull:
    case Variant::kHunetOnly:
    case Variant::kNoSlResidual:
    case Variant::kHbCruForDilated:
      return plain + dynamic_param_count(ch, c.k) + plain;
    case Variant::kHbPlain:
      return plain;
    case Variant::kHbNoDynamic:
      return plain + plain;
    case Variant::kHbNoDilated:
      return dynamic_param_count(ch, c.k) + plain;
    case Variant::kHbCruForDynamic:
      return plain + plain + plain;
    case Variant::kSixCruCb:
      return 0;
  }
  throw std::logic_error("hb_param_count: unhandled variant");
}

inline std::int64_t cb_param_count(const ModelConfig& c) {
  std::int64_t ch = c.channels;
  std::int64_t fc = c.fused_channels();
  std::int64_t total = 0;
  if (c.scale == 2 || c.scale == 3) {
    total += conv_param_count(fc, ch * c.scale * c.scale);
  } else {
    total += conv_param_count(fc, ch * 4);
    total += conv_param_count(ch, ch * 4);
  }
  total += conv_param_count(ch, 3);
  return total;
}

inline std::int64_t count_parameters(const ModelConfig& c) {
  c.validate();
  std::int64_t ch = c.channels;
  std::int64_t total = 0;
  if (c.variant == Variant::kSixCruCb) {
    total += conv_param_count(3, ch) + 5 * conv_param_count(ch, ch);
  } else {
    total += conv_param_count(3, ch) + c.hb_count * hb_param_count(c);
  }
  if (c.has_slnet()) {
    total += conv_param_count(3, ch) + 15 * conv_param_count(ch, ch);
  }
  total += cb_param_count(c);
  return total;
}

// One 3x3 convolution at the resolution it runs at: a multiply and an
// add per kernel tap and output element.
inline std::int64_t conv_flop_count(std::int64_t cin, std::int64_t cout,
                                    std::int64_t h, std::int64_t w) {
  return 2 * cin * cout * 9 * h * w;
}

// Forward-pass cost model over the whole network, batch of one, plus
// 2*in*out per attention dense layer.
inline std::int64_t estimate_flops(const ModelConfig& c, std::int64_t out_h,
                                   std::int64_t out_w) {
  c.validate();
  if (out_h <= 0 || out_w <= 0) return 0;
  std::int64_t ch = c.channels;
  std::int64_t lh = (out_h + c.scale - 1) / c.scale;
  std::int64_t lw = (out_w + c.scale - 1) / c.scale;
  auto conv_flops = conv_flop_count;

  std::int64_t mid = ch / kSqueezeRatio;
  std::int64_t dyn_extra = 2 * ch * mid + 2 * mid * c.k;

  std::int64_t dyn_per_hb = 0;
  std::int64_t convs_per_hb = 0;
  switch (c.variant) {
    case Variant::kFull:
    case Variant::kHunetOnly:
    case Variant::kNoSlResidual:
    case Variant::kHbCruForDilated:
      dyn_per_hb = 1;
      convs_per_hb = 3;
      break;
    case Variant::kHbPlain:
      convs_per_hb = 1;
      break;
    case Variant::kHbNoDynamic:
      convs_per_hb = 2;
      break;
    case Variant::kHbNoDilated:
      dyn_per_hb = 1;
      convs_per_hb = 2;
      break;
    case Variant::kHbCruForDynamic:
      convs_per_hb = 3;
      break;
    case Variant::kSixCruCb:
      break;
  }

  std::int64_t total = 0;
  if (c.variant == Variant::kSixCruCb) {
    total += conv_flops(3, ch, lh, lw) + 5 * conv_flops(ch, ch, lh, lw);
  } else {
    total += conv_flops(3, ch, lh, lw);
    total += c.hb_count * (convs_per_hb * conv_flops(ch, ch, lh, lw) +
                           dyn_per_hb * dyn_extra);
  }
  if (c.has_slnet()) {
    total += conv_flops(3, ch, lh, lw) + 15 * conv_flops(ch, ch, lh, lw);
  }
  std::int64_t fc = c.fused_channels();
  if (c.scale == 2 || c.scale == 3) {
    total += conv_flops(fc, ch * c.scale * c.scale, lh, lw);
  } else {
    total += conv_flops(fc, ch * 4, lh, lw);
    total += conv_flops(ch, ch * 4, lh * 2, lw * 2);
  }
  total += conv_flops(ch, 3, lh * c.scale, lw * c.scale);
  return total;
}

}  // namespace adsrnet
