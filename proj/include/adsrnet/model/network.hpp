#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adsrnet/core/rng.hpp"
#include "adsrnet/model/config.hpp"
#include "adsrnet/model/parameters.hpp"
#include "adsrnet/ops/attention.hpp"
#include "adsrnet/ops/conv2d.hpp"
#include "adsrnet/ops/dynamic_conv.hpp"
#include "adsrnet/ops/elementwise.hpp"
#include "adsrnet/ops/pixel_shuffle.hpp"

namespace adsrnet {

/// Structural audit counters, bumped during forward passes. Tests reset
/// them, run one pass and assert the traversed layer / skip-add counts.
struct ForwardStats {
  std::int64_t conv_layers = 0;
  std::int64_t hb_residual_adds = 0;
  std::int64_t slnet_skip_adds = 0;
};

inline ForwardStats& forward_stats() {
  static thread_local ForwardStats s;
  return s;
}

inline void reset_forward_stats() { forward_stats() = ForwardStats{}; }

/// Bare convolution layer (construction block stages have no activation).
template <typename T>
struct ConvLayer {
  ConvSpec spec;
  TensorT<T> weight;
  TensorT<T> bias;

  TensorT<T> forward(const TensorT<T>& x) const {
    ++forward_stats().conv_layers;
    return conv2d(x, spec, weight, bias);
  }
};

/// CRU: one 3x3 convolution followed by ReLU.
template <typename T>
struct Cru {
  ConvLayer<T> conv;

  TensorT<T> forward(const TensorT<T>& x) const { return relu(conv.forward(x)); }
};

// Attention bottleneck width divisor: squeeze maps 64 -> 64/kSqueezeRatio.
constexpr std::int64_t kSqueezeRatio = 4;

/// K candidate kernels plus the squeeze/excite attention branch that
/// mixes them per input. temperature is runtime state driven by the
/// training schedule, not a parameter.
template <typename T>
struct DynamicConvLayer {
  ConvSpec spec;
  std::vector<TensorT<T>> weights;
  std::vector<TensorT<T>> biases;
  TensorT<T> squeeze_w, squeeze_b;
  TensorT<T> excite_w, excite_b;
  double temperature = 1.0;

  TensorT<T> attention(const TensorT<T>& x) const {
    TensorT<T> a = global_avg_pool(x);
    a = relu(fully_connected(a, squeeze_w, squeeze_b));
    a = fully_connected(a, excite_w, excite_b);
    return softmax_temperature(a, temperature);
  }

  TensorT<T> forward(const TensorT<T>& x) const {
    ++forward_stats().conv_layers;
    return dynamic_conv_aggregate(x, attention(x), weights, biases, spec);
  }
};

/// One unit inside a heterogeneous block: a CRU or a dynamic CRU.
template <typename T>
struct HbUnit {
  enum class Kind { kCru, kDynamicCru };
  Kind kind = Kind::kCru;
  Cru<T> cru;
  DynamicConvLayer<T> dyn;

  TensorT<T> forward(const TensorT<T>& x) const {
    if (kind == Kind::kCru) return cru.forward(x);
    return relu(dyn.forward(x));
  }
};

/// Heterogeneous block: its units in sequence, plus the residual
/// connection from block input to block output.
template <typename T>
struct Hb {
  std::vector<HbUnit<T>> units;

  TensorT<T> forward(const TensorT<T>& x) const {
    TensorT<T> h = x;
    for (const HbUnit<T>& u : units) h = u.forward(h);
    ++forward_stats().hb_residual_adds;
    return add(h, x);
  }
};

/// The assembled network for one ModelConfig. Layer structs hold handle
/// copies of the tensors registered in params; both views share storage
/// and gradient slots.
template <typename T>
struct Model {
  ModelConfig config;
  std::vector<Cru<T>> head_crus;
  std::vector<Hb<T>> hbs;
  std::vector<Cru<T>> slnet;
  std::vector<ConvLayer<T>> cb_convs;
  std::vector<std::int64_t> cb_factors;
  ConvLayer<T> cb_out;
  ParameterSet<T> params;

  void set_temperature(double tau) {
    for (Hb<T>& hb : hbs) {
      for (HbUnit<T>& u : hb.units) {
        if (u.kind == HbUnit<T>::Kind::kDynamicCru) u.dyn.temperature = tau;
      }
    }
  }

  // Upper branch: CRU (3->64) then the heterogeneous blocks.
  TensorT<T> forward_hunet(const TensorT<T>& x) const {
    TensorT<T> h = head_crus[0].forward(x);
    for (const Hb<T>& hb : hbs) h = hb.forward(h);
    return h;
  }

  // Lower branch: a 16-CRU chain whose second half mirrors the first.
  // u10 consumes u9 + O_8, each later layer k consumes u_{k-1} + O_{18-k},
  // and the branch output is u16 + O_1; no_sl_residual drops every add.
  TensorT<T> forward_slnet(const TensorT<T>& x) const {
    bool residuals = config.slnet_residuals();
    std::vector<TensorT<T>> o(9);
    TensorT<T> h = slnet[0].forward(x);
    o[1] = h;
    for (std::int64_t i = 2; i <= 8; ++i) {
      h = slnet[static_cast<std::size_t>(i - 1)].forward(h);
      o[static_cast<std::size_t>(i)] = h;
    }
    TensorT<T> u = slnet[8].forward(h);
    for (std::int64_t kk = 10; kk <= 16; ++kk) {
      TensorT<T> in = u;
      if (residuals) {
        ++forward_stats().slnet_skip_adds;
        in = add(u, o[static_cast<std::size_t>(18 - kk)]);
      }
      u = slnet[static_cast<std::size_t>(kk - 1)].forward(in);
    }
    if (residuals) {
      ++forward_stats().slnet_skip_adds;
      return add(u, o[1]);
    }
    return u;
  }

  // Construction block: sub-pixel upsampling stage(s) then the 64->3 conv.
  TensorT<T> forward_cb(const TensorT<T>& f) const {
    TensorT<T> h = f;
    for (std::size_t i = 0; i < cb_convs.size(); ++i) {
      h = pixel_shuffle(cb_convs[i].forward(h), cb_factors[i]);
    }
    return cb_out.forward(h);
  }

  TensorT<T> forward(const TensorT<T>& input) const {
    if (input.shape().c != 3) {
      throw std::invalid_argument(detail::str_cat(
          "Model::forward: input must have 3 channels, got shape ",
          input.shape().str()));
    }
    if (config.variant == Variant::kSixCruCb) {
      TensorT<T> h = input;
      for (const Cru<T>& cru : head_crus) h = cru.forward(h);
      return forward_cb(h);
    }
    TensorT<T> hu = forward_hunet(input);
    if (!config.has_slnet()) return forward_cb(hu);
    TensorT<T> sl = forward_slnet(input);
    TensorT<T> fused = config.fusion == Fusion::kMultiply ? mul(hu, sl)
                                                          : concat_channels(hu, sl);
    return forward_cb(fused);
  }
};

namespace detail {

template <typename T>
class ModelBuilder {
 public:
  ModelBuilder(Model<T>& m, std::uint64_t seed) : m_(m), rng_(seed) {}

  ConvLayer<T> conv(const std::string& prefix, ConvSpec spec) {
    spec.validate();
    ConvLayer<T> layer;
    layer.spec = spec;
    double stddev = std::sqrt(2.0 / static_cast<double>(spec.in_channels * 9));
    layer.weight = param(prefix + ".weight",
                         TensorT<T>::randn(spec.weight_shape(), rng_, stddev));
    layer.bias = param(prefix + ".bias", TensorT<T>::zeros(spec.bias_shape()));
    return layer;
  }

  Cru<T> cru(const std::string& prefix, ConvSpec spec) {
    return Cru<T>{conv(prefix, spec)};
  }

  // Candidate kernels use the same fan-in init as plain convs. The excite
  // layer starts at zero so the initial attention is exactly uniform 1/K.
  DynamicConvLayer<T> dynamic(const std::string& prefix, std::int64_t channels,
                              std::int64_t k) {
    DynamicConvLayer<T> d;
    d.spec = ConvSpec{channels, channels, 1, 1};
    double stddev = std::sqrt(2.0 / static_cast<double>(channels * 9));
    for (std::int64_t i = 0; i < k; ++i) {
      d.weights.push_back(param(detail::str_cat(prefix, ".w", i),
                                TensorT<T>::randn(d.spec.weight_shape(), rng_, stddev)));
    }
    for (std::int64_t i = 0; i < k; ++i) {
      d.biases.push_back(param(detail::str_cat(prefix, ".b", i),
                               TensorT<T>::zeros(d.spec.bias_shape())));
    }
    std::int64_t mid = channels / kSqueezeRatio;
    double dense_std = std::sqrt(2.0 / static_cast<double>(channels));
    d.squeeze_w = param(prefix + ".attn.squeeze.weight",
                        TensorT<T>::randn(Shape4(mid, channels, 1, 1), rng_, dense_std));
    d.squeeze_b = param(prefix + ".attn.squeeze.bias",
                        TensorT<T>::zeros(Shape4(mid, 1, 1, 1)));
    d.excite_w = param(prefix + ".attn.excite.weight",
                       TensorT<T>::zeros(Shape4(k, mid, 1, 1)));
    d.excite_b = param(prefix + ".attn.excite.bias",
                       TensorT<T>::zeros(Shape4(k, 1, 1, 1)));
    return d;
  }

 private:
  TensorT<T> param(const std::string& name, TensorT<T> t) {
    t.set_requires_grad(true);
    m_.params.add(name, t);
    return t;
  }

  Model<T>& m_;
  Rng rng_;
};

}  // namespace detail

/// Constructs the network for a config with freshly initialized
/// parameters. Layers are created in a fixed order and the generator is
/// consumed in that order, so (config, seed) determines every initial
/// value bit-exactly.
template <typename T>
Model<T> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model<T> m;
  m.config = config;
  detail::ModelBuilder<T> b(m, seed);
  std::int64_t ch = config.channels;

  if (config.variant == Variant::kSixCruCb) {
    for (std::int64_t i = 1; i <= 6; ++i) {
      m.head_crus.push_back(b.cru(detail::str_cat("hunet.cru", i),
                                  ConvSpec{i == 1 ? 3 : ch, ch, 1, 1}));
    }
  } else {
    m.head_crus.push_back(b.cru("hunet.cru1", ConvSpec{3, ch, 1, 1}));
    for (std::int64_t i = 1; i <= config.hb_count; ++i) {
      std::string p = detail::str_cat("hunet.hb", i);
      Hb<T> hb;
      auto push_cru = [&](const std::string& name, std::int64_t dil) {
        HbUnit<T> u;
        u.kind = HbUnit<T>::Kind::kCru;
        u.cru = b.cru(p + "." + name, ConvSpec{ch, ch, dil, dil});
        hb.units.push_back(u);
      };
      auto push_dynamic = [&]() {
        HbUnit<T> u;
        u.kind = HbUnit<T>::Kind::kDynamicCru;
        u.dyn = b.dynamic(p + ".dynamic", ch, config.k);
        hb.units.push_back(u);
      };
      switch (config.variant) {
        case Variant::kFull:
        case Variant::kHunetOnly:
        case Variant::kNoSlResidual:
          push_cru("dilated", 2);
          push_dynamic();
          push_cru("plain", 1);
          break;
        case Variant::kHbPlain:
          push_cru("plain", 1);
          break;
        case Variant::kHbNoDynamic:
          push_cru("dilated", 2);
          push_cru("plain", 1);
          break;
        case Variant::kHbNoDilated:
          push_dynamic();
          push_cru("plain", 1);
          break;
        case Variant::kHbCruForDilated:
          push_cru("cru_for_dilated", 1);
          push_dynamic();
          push_cru("plain", 1);
          break;
        case Variant::kHbCruForDynamic:
          push_cru("dilated", 2);
          push_cru("cru_for_dynamic", 1);
          push_cru("plain", 1);
          break;
        case Variant::kSixCruCb:
          break;
      }
      m.hbs.push_back(hb);
    }
  }

  if (config.has_slnet()) {
    for (std::int64_t i = 1; i <= 16; ++i) {
      m.slnet.push_back(b.cru(detail::str_cat("slnet.l", i),
                              ConvSpec{i == 1 ? 3 : ch, ch, 1, 1}));
    }
  }

  std::int64_t fc = config.fused_channels();
  if (config.scale == 2 || config.scale == 3) {
    std::int64_t s = config.scale;
    m.cb_convs.push_back(b.conv("cb.up1.conv", ConvSpec{fc, ch * s * s, 1, 1}));
    m.cb_factors.push_back(s);
  } else {
    m.cb_convs.push_back(b.conv("cb.up1.conv", ConvSpec{fc, ch * 4, 1, 1}));
    m.cb_factors.push_back(2);
    m.cb_convs.push_back(b.conv("cb.up2.conv", ConvSpec{ch, ch * 4, 1, 1}));
    m.cb_factors.push_back(2);
  }
  m.cb_out = b.conv("cb.out", ConvSpec{ch, 3, 1, 1});
  return m;
}

}  // namespace adsrnet
