// Network assembly: structural audits, compositional oracles against the
// standalone ops, parameter accounting recomputed from scratch, and the
// parameter naming scheme.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

#include "adsrnet/model/accounting.hpp"
#include "adsrnet/model/network.hpp"
#include "adsrnet/ops/attention.hpp"
#include "adsrnet/ops/conv2d.hpp"
#include "adsrnet/ops/dynamic_conv.hpp"
#include "adsrnet/ops/elementwise.hpp"

using namespace adsrnet;
using testutil::check_close;
using testutil::check_exact;

namespace {

ModelConfig make_config(Variant v, std::int64_t scale,
                        Fusion fusion = Fusion::kMultiply) {
  ModelConfig c;
  c.variant = v;
  c.scale = scale;
  c.fusion = fusion;
  return c;
}

void zero_params_with_prefix(Model<float>& m, const std::string& prefix) {
  for (auto& e : m.params.entries()) {
    if (e.name.rfind(prefix, 0) != 0) continue;
    Tensor t = e.tensor;
    for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = 0.0f;
  }
}

void fill_params_with_prefix(Model<float>& m, const std::string& prefix,
                             float value) {
  for (auto& e : m.params.entries()) {
    if (e.name.rfind(prefix, 0) != 0) continue;
    Tensor t = e.tensor;
    for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = value;
  }
}

// Parameter arithmetic recomputed from the layer definitions, sharing
// nothing with the library's accounting helpers.
std::int64_t tconv(std::int64_t cin, std::int64_t cout) {
  return cin * cout * 9 + cout;
}

std::int64_t tdense(std::int64_t in, std::int64_t out) { return in * out + out; }

std::int64_t tdyn(std::int64_t k) {
  return k * tconv(64, 64) + tdense(64, 16) + tdense(16, k);
}

std::int64_t expected_params(const ModelConfig& c) {
  std::int64_t hb = 0;
  switch (c.variant) {
    case Variant::kFull:
    case Variant::kHunetOnly:
    case Variant::kNoSlResidual:
      hb = 2 * tconv(64, 64) + tdyn(c.k);
      break;
    case Variant::kHbPlain:
      hb = tconv(64, 64);
      break;
    case Variant::kHbNoDynamic:
      hb = 2 * tconv(64, 64);
      break;
    case Variant::kHbNoDilated:
      hb = tconv(64, 64) + tdyn(c.k);
      break;
    case Variant::kHbCruForDilated:
      hb = 2 * tconv(64, 64) + tdyn(c.k);
      break;
    case Variant::kHbCruForDynamic:
      hb = 3 * tconv(64, 64);
      break;
    case Variant::kSixCruCb:
      break;
  }

  std::int64_t total = 0;
  if (c.variant == Variant::kSixCruCb) {
    total += tconv(3, 64) + 5 * tconv(64, 64);
  } else {
    total += tconv(3, 64) + 5 * hb;
  }
  bool slnet = c.variant == Variant::kFull || c.variant == Variant::kNoSlResidual;
  if (slnet) total += tconv(3, 64) + 15 * tconv(64, 64);

  std::int64_t fc = (slnet && c.fusion == Fusion::kConcat) ? 128 : 64;
  if (c.scale == 4) {
    total += tconv(fc, 256) + tconv(64, 256);
  } else {
    total += tconv(fc, 64 * c.scale * c.scale);
  }
  total += tconv(64, 3);
  return total;
}

}  // namespace

TEST_CASE("forward pass traverses the documented layer counts") {
  Rng rng(31);
  Tensor x = Tensor::randn(Shape4(1, 3, 8, 8), rng, 0.5);

  SUBCASE("full network at x2") {
    Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 7);
    reset_forward_stats();
    Tensor hu = m.forward_hunet(x);
    CHECK(forward_stats().conv_layers == 16);
    CHECK(forward_stats().hb_residual_adds == 5);
    CHECK(hu.shape() == Shape4(1, 64, 8, 8));

    reset_forward_stats();
    m.forward(x);
    CHECK(forward_stats().conv_layers == 34);
    CHECK(forward_stats().hb_residual_adds == 5);
    CHECK(forward_stats().slnet_skip_adds == 8);
  }

  SUBCASE("no_sl_residual keeps both branches but drops every skip add") {
    Model<float> m = build_model<float>(make_config(Variant::kNoSlResidual, 2), 7);
    reset_forward_stats();
    m.forward(x);
    CHECK(forward_stats().conv_layers == 34);
    CHECK(forward_stats().hb_residual_adds == 5);
    CHECK(forward_stats().slnet_skip_adds == 0);
  }

  SUBCASE("hunet_only drops the lower branch") {
    Model<float> m = build_model<float>(make_config(Variant::kHunetOnly, 2), 7);
    reset_forward_stats();
    m.forward(x);
    CHECK(forward_stats().conv_layers == 18);
    CHECK(forward_stats().slnet_skip_adds == 0);
  }

  SUBCASE("six_cru_cb is a straight stack") {
    Model<float> m2 = build_model<float>(make_config(Variant::kSixCruCb, 2), 7);
    reset_forward_stats();
    m2.forward(x);
    CHECK(forward_stats().conv_layers == 8);
    CHECK(forward_stats().hb_residual_adds == 0);

    Model<float> m4 = build_model<float>(make_config(Variant::kSixCruCb, 4), 7);
    reset_forward_stats();
    m4.forward(x);
    CHECK(forward_stats().conv_layers == 9);
  }

  SUBCASE("reduced blocks traverse fewer convolutions") {
    Model<float> mp = build_model<float>(make_config(Variant::kHbPlain, 2), 7);
    reset_forward_stats();
    mp.forward(x);
    CHECK(forward_stats().conv_layers == 8);
    CHECK(forward_stats().hb_residual_adds == 5);

    Model<float> md = build_model<float>(make_config(Variant::kHbNoDynamic, 2), 7);
    reset_forward_stats();
    md.forward(x);
    CHECK(forward_stats().conv_layers == 13);
  }
}

TEST_CASE("lower branch matches a literal transcription of its definition") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 19);
  Rng rng(20);
  Tensor x = Tensor::randn(Shape4(1, 3, 6, 6), rng, 0.5);

  auto layer = [&](std::int64_t i, const Tensor& z) {
    const ConvLayer<float>& c = m.slnet[static_cast<std::size_t>(i - 1)].conv;
    return relu(conv2d(z, c.spec, c.weight, c.bias));
  };

  Tensor o1 = layer(1, x);
  Tensor o2 = layer(2, o1);
  Tensor o3 = layer(3, o2);
  Tensor o4 = layer(4, o3);
  Tensor o5 = layer(5, o4);
  Tensor o6 = layer(6, o5);
  Tensor o7 = layer(7, o6);
  Tensor o8 = layer(8, o7);
  Tensor u9 = layer(9, o8);
  Tensor u10 = layer(10, add(u9, o8));
  Tensor u11 = layer(11, add(u10, o7));
  Tensor u12 = layer(12, add(u11, o6));
  Tensor u13 = layer(13, add(u12, o5));
  Tensor u14 = layer(14, add(u13, o4));
  Tensor u15 = layer(15, add(u14, o3));
  Tensor u16 = layer(16, add(u15, o2));
  Tensor want = add(u16, o1);

  Tensor got = m.forward_slnet(x);
  check_close(got.vec(), want.vec(), 1e-6);
}

TEST_CASE("heterogeneous block matches its composition from standalone ops") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 23);
  m.set_temperature(3.0);
  const Hb<float>& hb = m.hbs[1];
  const ConvLayer<float>& dil = hb.units[0].cru.conv;
  const DynamicConvLayer<float>& dyn = hb.units[1].dyn;
  const ConvLayer<float>& pl = hb.units[2].cru.conv;

  CHECK(dil.spec.dilation == 2);
  CHECK(dil.spec.padding == 2);
  CHECK(pl.spec.dilation == 1);
  CHECK(dyn.temperature == 3.0);

  Rng rng(24);
  Tensor x = Tensor::randn(Shape4(2, 64, 5, 5), rng, 0.3);

  Tensor d = relu(conv2d(x, dil.spec, dil.weight, dil.bias));
  Tensor a = global_avg_pool(d);
  a = relu(fully_connected(a, dyn.squeeze_w, dyn.squeeze_b));
  a = fully_connected(a, dyn.excite_w, dyn.excite_b);
  a = softmax_temperature(a, dyn.temperature);
  Tensor y = relu(dynamic_conv_aggregate(d, a, dyn.weights, dyn.biases, dyn.spec));
  Tensor p = relu(conv2d(y, pl.spec, pl.weight, pl.bias));
  Tensor want = add(p, x);

  Tensor got = hb.forward(x);
  check_close(got.vec(), want.vec(), 1e-6);
}

TEST_CASE("block output never drops below its own input") {
  // The last unit ends in ReLU, so output - input is that ReLU image: >= 0
  // elementwise no matter how negative the input is.
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 29);
  Rng rng(30);
  Tensor x = Tensor::randn(Shape4(1, 64, 6, 6), rng);
  for (const Hb<float>& hb : m.hbs) {
    Tensor out = hb.forward(x);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      CHECK(out.data()[i] - x.data()[i] >= 0.0f);
    }
  }
}

TEST_CASE("zeroed parameters reduce the network to its skip structure") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 33);
  zero_params_with_prefix(m, "");
  Rng rng(34);

  // Each block collapses to the identity: every unit emits zero, the
  // residual returns the input bit for bit.
  Tensor h = Tensor::randn(Shape4(1, 64, 4, 4), rng);
  check_exact(m.hbs[0].forward(h).vec(), h.vec());

  // Both branches produce exactly zero from the zeroed first CRU onward.
  Tensor x = Tensor::randn(Shape4(1, 3, 4, 4), rng);
  check_exact(m.forward_hunet(x).vec(), Tensor::zeros(Shape4(1, 64, 4, 4)).vec());
  check_exact(m.forward_slnet(x).vec(), Tensor::zeros(Shape4(1, 64, 4, 4)).vec());
}

TEST_CASE("zeroed upper branch gates the product: output ignores the input") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 37);
  zero_params_with_prefix(m, "hunet.");
  // Nonzero construction-block biases make the constant output visibly
  // nonzero, so the check below is not vacuous.
  fill_params_with_prefix(m, "cb.up1.conv.bias", 0.37f);

  Rng rng(38);
  Tensor xa = Tensor::randn(Shape4(1, 3, 6, 6), rng);
  Tensor xb = Tensor::randn(Shape4(1, 3, 6, 6), rng);
  Tensor ya = m.forward(xa);
  Tensor yb = m.forward(xb);
  check_exact(ya.vec(), yb.vec());

  bool any_nonzero = false;
  for (float v : ya.vec()) any_nonzero |= (v != 0.0f);
  CHECK(any_nonzero);
}

TEST_CASE("forward honors the scale factor across batch and size") {
  for (std::int64_t s : {2, 3, 4}) {
    Model<float> m = build_model<float>(make_config(Variant::kFull, s), 41);
    Rng rng(42);
    for (std::int64_t n : {1, 2}) {
      for (std::int64_t h : {8, 12}) {
        for (std::int64_t w : {8, 12}) {
          Tensor x = Tensor::randn(Shape4(n, 3, h, w), rng, 0.2);
          Tensor y = m.forward(x);
          CHECK(y.shape() == Shape4(n, 3, s * h, s * w));
        }
      }
    }
  }
}

TEST_CASE("forward rejects inputs that are not 3-channel") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 43);
  CHECK_THROWS_AS(m.forward(Tensor::zeros(Shape4(1, 1, 8, 8))),
                  std::invalid_argument);
  CHECK_THROWS_AS(m.forward(Tensor::zeros(Shape4(1, 64, 8, 8))),
                  std::invalid_argument);
}

TEST_CASE("analytic parameter counts match models built from scratch") {
  // Anchor values recomputed by hand from the layer shapes.
  CHECK(tconv(3, 64) == 1792);
  CHECK(tconv(64, 64) == 36928);
  CHECK(tdyn(4) == 148820);

  ModelConfig full2 = make_config(Variant::kFull, 2);
  std::int64_t hunet = tconv(3, 64) + 5 * (2 * tconv(64, 64) + tdyn(4));
  std::int64_t slnet = tconv(3, 64) + 15 * tconv(64, 64);
  std::int64_t cb2 = tconv(64, 256) + tconv(64, 3);
  CHECK(hunet == 1115172);
  CHECK(slnet == 555712);
  CHECK(cb2 == 149443);
  CHECK(expected_params(full2) == 1820327);
  CHECK(count_parameters(full2) == 1820327);

  for (Variant v : all_variants()) {
    for (std::int64_t s : {2, 3, 4}) {
      ModelConfig c = make_config(v, s);
      std::int64_t want = expected_params(c);
      INFO("variant " << variant_name(v) << " x" << s);
      CHECK(count_parameters(c) == want);
      Model<float> m = build_model<float>(c, 5);
      CHECK(m.params.element_count() == want);
    }
  }

  // Concatenation fusion doubles the channels entering the first
  // upsampling convolution.
  ModelConfig cc = make_config(Variant::kFull, 2, Fusion::kConcat);
  CHECK(count_parameters(cc) == expected_params(cc));
  CHECK(expected_params(cc) - expected_params(full2) == tconv(128, 256) - tconv(64, 256));
  Model<float> mc = build_model<float>(cc, 5);
  CHECK(mc.params.element_count() == count_parameters(cc));

  // K sweeps move only the dynamic-layer share.
  for (std::int64_t k : {1, 2, 8}) {
    ModelConfig ck = make_config(Variant::kFull, 2);
    ck.k = k;
    CHECK(count_parameters(ck) == expected_params(ck));
  }
}

TEST_CASE("flop model sanity") {
  CHECK(conv_flop_count(64, 64, 16, 16) == 18874368);
  ModelConfig c = make_config(Variant::kFull, 2);
  CHECK(estimate_flops(c, 0, 128) == 0);
  CHECK(estimate_flops(c, 128, 0) == 0);
  CHECK(estimate_flops(c, 128, 128) > 0);
  // Cost grows with output size and with the extra x4 stage.
  CHECK(estimate_flops(c, 256, 256) > estimate_flops(c, 128, 128));
  CHECK(estimate_flops(make_config(Variant::kFull, 4), 256, 256) > 0);
}

TEST_CASE("initialization is a pure function of config and seed") {
  ModelConfig c = make_config(Variant::kFull, 2);
  Model<float> a = build_model<float>(c, 11);
  Model<float> b = build_model<float>(c, 11);
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const auto& ea = a.params.entries()[i];
    const auto& eb = b.params.entries()[i];
    CHECK(ea.name == eb.name);
    INFO("parameter " << ea.name);
    CHECK(ea.tensor.vec() == eb.tensor.vec());
  }

  Model<float> d = build_model<float>(c, 12);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    any_diff |= (a.params.entries()[i].tensor.vec() != d.params.entries()[i].tensor.vec());
  }
  CHECK(any_diff);
}

TEST_CASE("set_temperature reaches every dynamic layer") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 13);
  m.set_temperature(7.5);
  std::int64_t seen = 0;
  for (const Hb<float>& hb : m.hbs) {
    for (const HbUnit<float>& u : hb.units) {
      if (u.kind == HbUnit<float>::Kind::kDynamicCru) {
        CHECK(u.dyn.temperature == 7.5);
        ++seen;
      }
    }
  }
  CHECK(seen == 5);
}

TEST_CASE("parameter names follow the documented scheme") {
  Model<float> m = build_model<float>(make_config(Variant::kFull, 2), 17);
  const ParameterSet<float>& p = m.params;

  CHECK(p.get("hunet.cru1.weight").shape() == Shape4(64, 3, 3, 3));
  CHECK(p.get("hunet.cru1.bias").shape() == Shape4(64, 1, 1, 1));
  CHECK(p.get("hunet.hb1.dilated.weight").shape() == Shape4(64, 64, 3, 3));
  CHECK(p.get("hunet.hb5.plain.bias").shape() == Shape4(64, 1, 1, 1));
  CHECK(p.get("hunet.hb2.dynamic.w0").shape() == Shape4(64, 64, 3, 3));
  CHECK(p.get("hunet.hb2.dynamic.w3").shape() == Shape4(64, 64, 3, 3));
  CHECK(p.get("hunet.hb2.dynamic.b3").shape() == Shape4(64, 1, 1, 1));
  CHECK(p.get("hunet.hb3.dynamic.attn.squeeze.weight").shape() == Shape4(16, 64, 1, 1));
  CHECK(p.get("hunet.hb3.dynamic.attn.squeeze.bias").shape() == Shape4(16, 1, 1, 1));
  CHECK(p.get("hunet.hb3.dynamic.attn.excite.weight").shape() == Shape4(4, 16, 1, 1));
  CHECK(p.get("hunet.hb3.dynamic.attn.excite.bias").shape() == Shape4(4, 1, 1, 1));
  CHECK(p.get("slnet.l1.weight").shape() == Shape4(64, 3, 3, 3));
  CHECK(p.get("slnet.l16.bias").shape() == Shape4(64, 1, 1, 1));
  CHECK(p.get("cb.up1.conv.weight").shape() == Shape4(256, 64, 3, 3));
  CHECK(p.get("cb.out.weight").shape() == Shape4(3, 64, 3, 3));
  CHECK(p.get("cb.out.bias").shape() == Shape4(3, 1, 1, 1));
  CHECK_THROWS_AS(p.get("hunet.hb2.dynamic.w4"), std::invalid_argument);
  CHECK_THROWS_AS(p.get("no.such.parameter"), std::invalid_argument);

  Model<float> sub1 = build_model<float>(make_config(Variant::kHbCruForDilated, 2), 17);
  CHECK(sub1.params.get("hunet.hb1.cru_for_dilated.weight").shape() ==
        Shape4(64, 64, 3, 3));
  Model<float> sub2 = build_model<float>(make_config(Variant::kHbCruForDynamic, 2), 17);
  CHECK(sub2.params.get("hunet.hb1.cru_for_dynamic.weight").shape() ==
        Shape4(64, 64, 3, 3));

  Model<float> m4 = build_model<float>(make_config(Variant::kFull, 4), 17);
  CHECK(m4.params.get("cb.up2.conv.weight").shape() == Shape4(256, 64, 3, 3));
}
