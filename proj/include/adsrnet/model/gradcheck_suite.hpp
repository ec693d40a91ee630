#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adsrnet/model/gradcheck.hpp"
#include "adsrnet/model/network.hpp"
#include "adsrnet/ops/attention.hpp"
#include "adsrnet/ops/conv2d.hpp"
#include "adsrnet/ops/dynamic_conv.hpp"
#include "adsrnet/ops/elementwise.hpp"
#include "adsrnet/ops/pixel_shuffle.hpp"
#include "adsrnet/train/loss.hpp"

namespace adsrnet {

namespace detail {

// Uniform magnitude in [lo, hi) with a random sign. Test points stay
// clear of the kinks in relu and |.| so central differences are valid.
inline TensorT<double> rand_signed(const Shape4& shape, Rng& rng, double lo, double hi) {
  TensorT<double> t(shape);
  double* p = t.data();
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    double mag = lo + (hi - lo) * rng.uniform();
    p[i] = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

inline TensorT<double> leafify(TensorT<double> t) {
  t.set_requires_grad(true);
  return t;
}

// Scalar objective with non-uniform upstream gradient: sum(t * c) for a
// fixed coefficient tensor. A plain sum would feed every op a constant
// upstream of one, which misses transposition bugs (and is identically
// zero through a softmax).
inline TensorT<double> weighted(const TensorT<double>& t, const TensorT<double>& c) {
  return sum(mul(t, c));
}

}  // namespace detail

/// Central-difference verification of every differentiable operator, in
/// 64-bit precision on small fixed-seed inputs. Returns one report per
/// (op, leaf) pair with names like "conv2d/weight".
inline std::vector<GradCheckReport> op_gradchecks(const GradCheckOptions& opt = GradCheckOptions{}) {
  using D = TensorT<double>;
  using detail::leafify;
  using detail::rand_signed;
  using detail::weighted;
  std::vector<GradCheckReport> all;

  auto run = [&](const std::string& op,
                 const std::function<D()>& loss,
                 const std::vector<std::pair<std::string, D>>& leaves) {
    for (GradCheckReport r : gradcheck<double>(loss, leaves, opt)) {
      r.name = op + "/" + r.name;
      all.push_back(r);
    }
  };

  Rng rng(opt.seed);
  {
    D a = leafify(D::randn(Shape4(2, 3, 4, 5), rng));
    D b = leafify(D::randn(Shape4(2, 3, 4, 5), rng));
    D c = D::randn(Shape4(2, 3, 4, 5), rng);
    run("add", [=] { return weighted(add(a, b), c); }, {{"a", a}, {"b", b}});
  }
  {
    D a = leafify(D::randn(Shape4(2, 3, 4, 5), rng));
    D b = leafify(D::randn(Shape4(2, 3, 4, 5), rng));
    D c = D::randn(Shape4(2, 3, 4, 5), rng);
    run("mul", [=] { return weighted(mul(a, b), c); }, {{"a", a}, {"b", b}});
  }
  {
    D a = leafify(rand_signed(Shape4(2, 4, 5, 5), rng, 0.05, 1.0));
    D c = D::randn(Shape4(2, 4, 5, 5), rng);
    run("relu", [=] { return weighted(relu(a), c); }, {{"x", a}});
  }
  {
    D a = leafify(D::randn(Shape4(1, 2, 3, 4), rng));
    D b = leafify(D::randn(Shape4(1, 2, 3, 4), rng));
    run("sum", [=] { return sum(mul(a, b)); }, {{"a", a}, {"b", b}});
  }
  {
    D a = leafify(D::randn(Shape4(1, 3, 4, 4), rng));
    D b = leafify(D::randn(Shape4(1, 5, 4, 4), rng));
    D c = D::randn(Shape4(1, 8, 4, 4), rng);
    run("concat_channels", [=] { return weighted(concat_channels(a, b), c); },
        {{"a", a}, {"b", b}});
  }
  {
    D x = leafify(D::randn(Shape4(2, 8, 5, 7), rng));
    D c = D::randn(Shape4(2, 8, 1, 1), rng);
    run("global_avg_pool", [=] { return weighted(global_avg_pool(x), c); }, {{"x", x}});
  }
  {
    D x = leafify(D::randn(Shape4(2, 16, 1, 1), rng));
    D w = leafify(D::randn(Shape4(4, 16, 1, 1), rng, 0.3));
    D b = leafify(D::randn(Shape4(4, 1, 1, 1), rng));
    D c = D::randn(Shape4(2, 4, 1, 1), rng);
    run("fully_connected", [=] { return weighted(fully_connected(x, w, b), c); },
        {{"x", x}, {"weight", w}, {"bias", b}});
  }
  {
    D logits = leafify(D::randn(Shape4(2, 4, 1, 1), rng));
    D c = D::randn(Shape4(2, 4, 1, 1), rng);
    run("softmax_temperature",
        [=] { return weighted(softmax_temperature(logits, 2.5), c); },
        {{"logits", logits}});
  }
  {
    ConvSpec spec{3, 5, 1, 1};
    D x = leafify(D::randn(Shape4(2, 3, 6, 7), rng));
    D w = leafify(D::randn(spec.weight_shape(), rng, 0.3));
    D b = leafify(D::randn(spec.bias_shape(), rng));
    D c = D::randn(Shape4(2, 5, 6, 7), rng);
    run("conv2d", [=] { return weighted(conv2d(x, spec, w, b), c); },
        {{"x", x}, {"weight", w}, {"bias", b}});
  }
  {
    ConvSpec spec{4, 4, 2, 2};
    D x = leafify(D::randn(Shape4(1, 4, 8, 8), rng));
    D w = leafify(D::randn(spec.weight_shape(), rng, 0.3));
    D b = leafify(D::randn(spec.bias_shape(), rng));
    D c = D::randn(Shape4(1, 4, 8, 8), rng);
    run("conv2d_dilated", [=] { return weighted(conv2d(x, spec, w, b), c); },
        {{"x", x}, {"weight", w}, {"bias", b}});
  }
  {
    D x = leafify(D::randn(Shape4(1, 8, 3, 4), rng));
    D c = D::randn(Shape4(1, 2, 6, 8), rng);
    run("pixel_shuffle", [=] { return weighted(pixel_shuffle(x, 2), c); }, {{"x", x}});
  }
  {
    ConvSpec spec{4, 4, 1, 1};
    std::int64_t k = 3;
    D x = leafify(D::randn(Shape4(2, 4, 5, 6), rng));
    D pi = leafify(rand_signed(Shape4(2, k, 1, 1), rng, 0.1, 1.0));
    std::vector<D> ws, bs;
    std::vector<std::pair<std::string, D>> leaves = {{"x", x}, {"pi", pi}};
    for (std::int64_t i = 0; i < k; ++i) {
      ws.push_back(leafify(D::randn(spec.weight_shape(), rng, 0.3)));
      bs.push_back(leafify(D::randn(spec.bias_shape(), rng)));
      leaves.emplace_back(detail::str_cat("w", i), ws.back());
      leaves.emplace_back(detail::str_cat("b", i), bs.back());
    }
    D c = D::randn(Shape4(2, 4, 5, 6), rng);
    run("dynamic_conv",
        [=] { return weighted(dynamic_conv_aggregate(x, pi, ws, bs, spec), c); },
        leaves);
  }
  {
    D pred = leafify(D::randn(Shape4(2, 3, 4, 4), rng));
    // Keep |pred - target| well above the probe step: |.| has a kink at 0.
    D target = add(pred.detached(), detail::rand_signed(Shape4(2, 3, 4, 4), rng, 0.05, 0.5));
    target = leafify(target);
    run("mae_loss", [=] { return mae_loss(pred, target); },
        {{"pred", pred}, {"target", target}});
  }
  return all;
}

/// End-to-end check of one assembled network: MAE between the forward
/// output and a fixed target, differentiated with respect to the network
/// input and every parameter. Returns the worst leaf error.
inline GradCheckReport model_gradcheck(const ModelConfig& config,
                                       const GradCheckOptions& opt = GradCheckOptions{},
                                       std::int64_t input_hw = 6, double tau = 5.0) {
  Model<double> model = build_model<double>(config, opt.seed);
  model.set_temperature(tau);

  // Central differences converge to the derivative only on a neighborhood
  // where the loss is differentiable. With the training init the ReLU
  // pre-activations cluster around zero, so some probe segment always
  // straddles a kink and the comparison measures the kink instead of the
  // gradient code. The check therefore moves every parameter into a
  // positive regime: weights uniform in [0.5, 1.5] / fan keep each layer's
  // row sums near one (activations neither vanish nor explode), biases
  // uniform in [0.1, 0.3] put a floor under every pre-activation. All
  // values being positive, each ReLU argument bounds its own kink margin,
  // orders of magnitude above any probe shift. Sign-dependent branches
  // are exercised by the mixed-sign op-level checks above.
  Rng rng(opt.seed + 1);
  for (auto& entry : model.params.entries()) {
    TensorT<double> t = entry.tensor;
    const Shape4& s = t.shape();
    bool is_bias = s.c == 1 && s.h == 1 && s.w == 1;
    double fan = static_cast<double>(s.c * s.h * s.w);
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      t.data()[i] = is_bias ? 0.1 + 0.2 * rng.uniform()
                            : (0.5 + rng.uniform()) / fan;
    }
  }

  TensorT<double> x(Shape4(1, 3, input_hw, input_hw));
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    x.data()[i] = 0.25 + 0.75 * rng.uniform();
  }
  x.set_requires_grad(true);

  // The target backs off from the model's own output by at least 0.5, so
  // no MAE term sits near its kink either.
  TensorT<double> pred0 = model.forward(x);
  TensorT<double> target(pred0.shape());
  for (std::int64_t i = 0; i < target.numel(); ++i) {
    target.data()[i] = pred0.data()[i] + 0.5 + 0.5 * rng.uniform();
  }

  std::vector<std::pair<std::string, TensorT<double>>> leaves = {{"input", x}};
  for (const auto& entry : model.params.entries()) {
    leaves.emplace_back(entry.name, entry.tensor);
  }

  auto loss = [&] { return mae_loss(model.forward(x), target); };
  auto reports = gradcheck<double>(loss, leaves, opt);

  GradCheckReport worst;
  worst.name = detail::str_cat("model/", variant_name(config.variant), "/x", config.scale);
  for (const GradCheckReport& r : reports) {
    if (r.max_rel_err > worst.max_rel_err) {
      worst.max_rel_err = r.max_rel_err;
      worst.name = detail::str_cat("model/", variant_name(config.variant), "/x",
                                   config.scale, "/", r.name);
    }
  }
  return worst;
}

}  // namespace adsrnet
