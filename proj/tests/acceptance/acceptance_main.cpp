// Acceptance gate. Each criterion prints exactly one verdict line:
//   criterion N: PASS|FAIL|SKIP - detail
// Exit code: 0 all pass, 1 any failure, 77 skipped (dataset not available).
//
// Criteria needing benchmark images (criterion 4) look for
//   <data-root>/{Set5,Set14,B100}/HR/*.png
// via --data or the ADSRNET_DATA environment variable and skip cleanly
// when absent. Everything else is self-contained: synthetic corpora are
// rendered on the fly, and the real command-line binary is driven as a
// subprocess for every end-to-end criterion.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adsrnet/cli/run_config.hpp"
#include "adsrnet/model/accounting.hpp"
#include "adsrnet/model/gradcheck_suite.hpp"

using namespace adsrnet;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string cli = ADSRNET_CLI_PATH;
  std::string data;
  std::string work;
  int criterion = 0;  // 0 = run all
};

struct Verdict {
  int code;  // 0 pass, 1 fail, 77 skip
  std::string detail;
};

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const Options& opt, const std::string& args) {
  std::string cmd = opt.cli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string fresh_dir(const std::string& base, const std::string& tag) {
  fs::path p = fs::path(base) / tag;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::vector<unsigned char> file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(is),
                                    std::istreambuf_iterator<char>());
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Synthetic scenes: anti-aliased geometric compositions over a color
// gradient, with a gentle smooth modulation. Sharp edges of arbitrary
// orientation are exactly the content bicubic upsampling blurs, so a
// correctly learning model can beat the baseline on this corpus.

Image8 synth_scene(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  Rng rng(seed);
  const std::int64_t H = 2 * h, W = 2 * w;
  std::vector<double> buf(static_cast<std::size_t>(3 * H * W));
  auto px = [&](std::int64_t y, std::int64_t x) -> double* {
    return buf.data() + 3 * (y * W + x);
  };

  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = 255.0 * rng.uniform();
    c1[c] = 255.0 * rng.uniform();
  }
  double ang = 6.2831853 * rng.uniform();
  double gx = std::cos(ang), gy = std::sin(ang);
  for (std::int64_t y = 0; y < H; ++y) {
    for (std::int64_t x = 0; x < W; ++x) {
      double t = ((x / double(W) - 0.5) * gx + (y / double(H) - 0.5) * gy + 1.0) / 2.0;
      double* p = px(y, x);
      for (int c = 0; c < 3; ++c) p[c] = (1.0 - t) * c0[c] + t * c1[c];
    }
  }

  std::int64_t shapes = 6 + rng.uniform_int(6);
  for (std::int64_t s = 0; s < shapes; ++s) {
    double col[3];
    for (int c = 0; c < 3; ++c) col[c] = 255.0 * rng.uniform();
    std::int64_t kind = rng.uniform_int(3);
    if (kind == 0) {
      double cx = W * rng.uniform(), cy = H * rng.uniform();
      double r = (0.04 + 0.2 * rng.uniform()) * std::min(H, W);
      for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
          double dx = x - cx, dy = y - cy;
          if (dx * dx + dy * dy < r * r) {
            double* p = px(y, x);
            for (int c = 0; c < 3; ++c) p[c] = col[c];
          }
        }
      }
    } else if (kind == 1) {
      std::int64_t x0 = rng.uniform_int(W), y0 = rng.uniform_int(H);
      std::int64_t x1 = std::min<std::int64_t>(W, x0 + 4 + rng.uniform_int(W / 2));
      std::int64_t y1 = std::min<std::int64_t>(H, y0 + 4 + rng.uniform_int(H / 2));
      for (std::int64_t y = y0; y < y1; ++y) {
        for (std::int64_t x = x0; x < x1; ++x) {
          double* p = px(y, x);
          for (int c = 0; c < 3; ++c) p[c] = col[c];
        }
      }
    } else {
      double cx = W * rng.uniform(), cy = H * rng.uniform();
      double a = 6.2831853 * rng.uniform();
      double dx = std::cos(a), dy = std::sin(a);
      double half_len = (0.1 + 0.4 * rng.uniform()) * W;
      double half_thick = 1.0 + 4.0 * rng.uniform();
      for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
          double ux = x - cx, uy = y - cy;
          double along = ux * dx + uy * dy;
          double across = -ux * dy + uy * dx;
          if (std::abs(along) < half_len && std::abs(across) < half_thick) {
            double* p = px(y, x);
            for (int c = 0; c < 3; ++c) p[c] = col[c];
          }
        }
      }
    }
  }

  double ma = 0.02 + 0.05 * rng.uniform(), mb = 6.2831853 * rng.uniform();
  double mc = 0.02 + 0.05 * rng.uniform(), md = 6.2831853 * rng.uniform();
  Image8 out(h, w);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double mod = 1.0 + 0.12 * std::sin(ma * 2 * x + mb) * std::sin(mc * 2 * y + md);
      for (std::int64_t c = 0; c < 3; ++c) {
        double v = 0.25 * (px(2 * y, 2 * x)[c] + px(2 * y, 2 * x + 1)[c] +
                           px(2 * y + 1, 2 * x)[c] + px(2 * y + 1, 2 * x + 1)[c]);
        v *= mod;
        out.at(y, x, c) = static_cast<std::uint8_t>(
            std::min(255.0, std::max(0.0, std::floor(v + 0.5))));
      }
    }
  }
  return out;
}

void write_split(const std::string& root, const std::string& split, int count,
                 std::int64_t hw, std::int64_t scale, std::uint64_t seed0) {
  std::string hr_dir = root + "/" + split + "/HR";
  fs::create_directories(hr_dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img%03d.png", i);
    write_png(hr_dir + "/" + name, synth_scene(hw, hw, seed0 + i));
  }
  degrade_directory(hr_dir, scale, root + "/" + split + "/LR_x" + std::to_string(scale));
}

struct MeanRow {
  double psnr;
  double ssim;
};

MeanRow parse_mean(const std::string& table_path) {
  std::ifstream is(table_path);
  if (!is) throw std::runtime_error("cannot read " + table_path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("mean\t", 0) == 0) {
      std::istringstream ls(line);
      std::string tag, p, s;
      std::getline(ls, tag, '\t');
      std::getline(ls, p, '\t');
      std::getline(ls, s, '\t');
      return {std::stod(p), std::stod(s)};
    }
  }
  throw std::runtime_error("no mean row in " + table_path);
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i]));
    worst = std::max(worst, d);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Criterion 1: the stock gradcheck invocation (operator suite plus the full
// model at scale 2 on a 1x3x8x8 input, 64-bit) passes its 1e-4 bound fast.

Verdict criterion_1(const Options& opt) {
  double t0 = now_s();
  RunResult r = run_cli(opt, "gradcheck");
  double dt = now_s() - t0;
  std::string worst;
  std::istringstream is(r.output);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("worst\t", 0) == 0) worst = line.substr(6, line.rfind('\t') - 6);
  }
  if (r.exit_code != 0) return {1, "gradcheck exited " + std::to_string(r.exit_code)};
  if (dt >= 300.0) return {1, "gradcheck took " + fmt(dt) + "s (budget 300s)"};
  return {0, "worst relative error " + worst + " in " + fmt(dt) + "s"};
}

// ---------------------------------------------------------------------------
// Criterion 2: structural oracles in 64-bit. The lower branch against a
// literal layer-by-layer transcription, one heterogeneous block against its
// composition from standalone ops, and dynamic convolution against
// mix-the-kernels-then-convolve.

Verdict criterion_2(const Options&) {
  using T = TensorT<double>;
  double t0 = now_s();
  ModelConfig mc;
  mc.scale = 2;
  Model<double> m = build_model<double>(mc, 19);
  Rng rng(20);

  T x = T::randn(Shape4(1, 3, 6, 6), rng, 0.5);
  auto layer = [&](std::int64_t i, const T& z) {
    const auto& c = m.slnet[static_cast<std::size_t>(i - 1)].conv;
    return relu(conv2d(z, c.spec, c.weight, c.bias));
  };
  T o1 = layer(1, x);
  T o2 = layer(2, o1), o3 = layer(3, o2), o4 = layer(4, o3), o5 = layer(5, o4);
  T o6 = layer(6, o5), o7 = layer(7, o6), o8 = layer(8, o7);
  T u = layer(9, o8);
  u = layer(10, add(u, o8));
  u = layer(11, add(u, o7));
  u = layer(12, add(u, o6));
  u = layer(13, add(u, o5));
  u = layer(14, add(u, o4));
  u = layer(15, add(u, o3));
  u = layer(16, add(u, o2));
  T want_sl = add(u, o1);
  double e_sl = max_rel_diff(m.forward_slnet(x).vec(), want_sl.vec());

  m.set_temperature(3.0);
  const auto& hb = m.hbs[1];
  const auto& dil = hb.units[0].cru.conv;
  const auto& dyn = hb.units[1].dyn;
  const auto& pl = hb.units[2].cru.conv;
  T hx = T::randn(Shape4(2, 64, 5, 5), rng, 0.3);
  T d = relu(conv2d(hx, dil.spec, dil.weight, dil.bias));
  T a = global_avg_pool(d);
  a = relu(fully_connected(a, dyn.squeeze_w, dyn.squeeze_b));
  a = fully_connected(a, dyn.excite_w, dyn.excite_b);
  a = softmax_temperature(a, dyn.temperature);
  T y = relu(dynamic_conv_aggregate(d, a, dyn.weights, dyn.biases, dyn.spec));
  T want_hb = add(relu(conv2d(y, pl.spec, pl.weight, pl.bias)), hx);
  double e_hb = max_rel_diff(hb.forward(hx).vec(), want_hb.vec());

  std::int64_t ch = 16, k = 3;
  ConvSpec spec{ch, ch, 1, 1};
  T dx = T::randn(Shape4(1, ch, 4, 4), rng);
  T pi(Shape4(1, k, 1, 1), {0.2, 0.5, 0.3});
  std::vector<T> ws, bs;
  for (std::int64_t i = 0; i < k; ++i) {
    ws.push_back(T::randn(spec.weight_shape(), rng, 0.1));
    bs.push_back(T::randn(spec.bias_shape(), rng));
  }
  T w_hat = T::zeros(spec.weight_shape());
  T b_hat = T::zeros(spec.bias_shape());
  for (std::int64_t i = 0; i < k; ++i) {
    double p = pi.data()[i];
    for (std::int64_t j = 0; j < w_hat.numel(); ++j)
      w_hat.data()[j] += p * ws[static_cast<std::size_t>(i)].data()[j];
    for (std::int64_t j = 0; j < b_hat.numel(); ++j)
      b_hat.data()[j] += p * bs[static_cast<std::size_t>(i)].data()[j];
  }
  T want_dc = conv2d(dx, spec, w_hat, b_hat);
  double e_dc = max_rel_diff(dynamic_conv_aggregate(dx, pi, ws, bs, spec).vec(),
                             want_dc.vec());

  double dt = now_s() - t0;
  double worst = std::max({e_sl, e_hb, e_dc});
  std::string detail = "lower-branch " + sci(e_sl) + ", block " + sci(e_hb) +
                       ", dynamic-agg " + sci(e_dc) + " (" + fmt(dt) + "s)";
  if (worst >= 1e-6) return {1, "oracle mismatch: " + detail};
  if (dt >= 60.0) return {1, "took " + fmt(dt) + "s (budget 60s)"};
  return {0, detail};
}

// ---------------------------------------------------------------------------
// Criterion 3: analytic parameter formula equals the live count for every
// variant/scale/k, and the reference configuration counts 1,820,327
// (within 1% of the published 1,819K rounding).

Verdict criterion_3(const Options&) {
  for (Variant v : all_variants()) {
    for (std::int64_t s : {2, 3, 4}) {
      for (std::int64_t k : {1, 4, 8}) {
        ModelConfig mc;
        mc.variant = v;
        mc.scale = s;
        mc.k = k;
        std::int64_t analytic = count_parameters(mc);
        Model<float> model = build_model<float>(mc, 1);
        std::int64_t live = model.params.element_count();
        if (analytic != live) {
          return {1, std::string(variant_name(v)) + " x" + std::to_string(s) +
                         " K=" + std::to_string(k) + ": analytic " +
                         std::to_string(analytic) + " != live " + std::to_string(live)};
        }
      }
    }
  }
  ModelConfig ref;
  std::int64_t n = count_parameters(ref);
  if (n != 1820327) return {1, "reference count " + std::to_string(n) + " != 1820327"};
  if (std::abs(n - 1819000) > 0.01 * 1819000) {
    return {1, "reference count " + std::to_string(n) + " not within 1% of 1819K"};
  }
  return {0, "81 configurations audited; reference = 1,820,327 (within 1% of 1,819K)"};
}

// ---------------------------------------------------------------------------
// Criterion 4: bicubic baseline against published numbers on the standard
// benchmarks. Needs real images; skips when they are not provided.

Verdict criterion_4(const Options& opt) {
  struct Bench {
    const char* name;
    std::int64_t scale;
    double psnr, ssim;
  };
  const Bench benches[] = {
      {"Set5", 2, 33.66, 0.9299},
      {"Set14", 3, 27.55, 0.7742},
      {"B100", 4, 25.96, 0.6675},
  };

  std::string root = opt.data;
  if (root.empty()) {
    const char* env = std::getenv("ADSRNET_DATA");
    if (env) root = env;
  }
  if (root.empty()) {
    return {77,
            "benchmark images not provided; pass --data <root> (or set ADSRNET_DATA) "
            "with <root>/Set5/HR/*.png, <root>/Set14/HR, <root>/B100/HR"};
  }
  for (const Bench& b : benches) {
    if (list_pngs(root + "/" + b.name + "/HR").empty()) {
      return {77, std::string("no PNGs under ") + root + "/" + b.name + "/HR"};
    }
  }

  double t0 = now_s();
  std::string detail;
  for (const Bench& b : benches) {
    // Stage a split with exact-geometry pairs: HR cropped to a multiple of
    // the scale, LR produced by the bicubic degradation.
    std::string ds = fresh_dir(opt.work, std::string("bench_") + b.name);
    std::string hr_dir = ds + "/val/HR";
    std::string lr_dir = ds + "/val/LR_x" + std::to_string(b.scale);
    fs::create_directories(hr_dir);
    fs::create_directories(lr_dir);
    for (const std::string& name : list_pngs(root + "/" + b.name + "/HR")) {
      Image8 hr = crop_to_multiple(read_png(root + "/" + b.name + "/HR/" + name), b.scale);
      write_png(hr_dir + "/" + name, hr);
      write_png(lr_dir + "/" + name, degrade_image(hr, b.scale));
    }
    std::string table = ds + "/report.tsv";
    RunResult r = run_cli(opt, "eval --baseline bicubic --data " + ds +
                                   " --split val --scale " + std::to_string(b.scale) +
                                   " --out " + table);
    if (r.exit_code != 0) {
      return {1, std::string(b.name) + ": eval exited " + std::to_string(r.exit_code)};
    }
    MeanRow m = parse_mean(table);
    if (std::abs(m.psnr - b.psnr) > 0.3 || std::abs(m.ssim - b.ssim) > 0.005) {
      return {1, std::string(b.name) + " x" + std::to_string(b.scale) + ": got " +
                     fmt(m.psnr) + "/" + fmt(m.ssim, 4) + ", expected " + fmt(b.psnr) +
                     "/" + fmt(b.ssim, 4) + " (tolerance 0.3 dB / 0.005)"};
    }
    detail += std::string(b.name) + " x" + std::to_string(b.scale) + " " + fmt(m.psnr) +
              "/" + fmt(m.ssim, 4) + "  ";
  }
  double dt = now_s() - t0;
  if (dt >= 300.0) return {1, "took " + fmt(dt) + "s (budget 300s)"};
  return {0, detail + "(" + fmt(dt) + "s)"};
}

// ---------------------------------------------------------------------------
// Criterion 5: training efficacy. (a) Overfitting one 48x48 LR crop for
// 2,000 steps exceeds 35 dB on that crop inside 10 CPU-minutes. (b) A
// from-scratch desk-scale run (10,000 steps, 55 training scenes) beats the
// bicubic baseline by at least 0.3 dB mean PSNR on a 5-scene validation
// split inside 2 CPU-hours.

Verdict criterion_5(const Options& opt) {
  // (a) single-crop overfit
  std::string ov = fresh_dir(opt.work, "overfit_ds");
  fs::create_directories(ov + "/train/HR");
  Image8 hr = synth_scene(96, 96, 501);
  write_png(ov + "/train/HR/img.png", hr);
  degrade_directory(ov + "/train/HR", 2, ov + "/train/LR_x2");
  Image8 lr = read_png(ov + "/train/LR_x2/img.png");

  std::string ov_run = fresh_dir(opt.work, "overfit_run");
  double t0 = now_s();
  RunResult tr = run_cli(
      opt, "train --out " + ov_run + " --data.root " + ov +
               " --train.total_steps 2000 --train.batch_size 1 --train.patch_lr 48"
               " --train.augment false --train.checkpoint_interval 2000"
               " --train.lr_initial 1e-3 --train.lr_halving_period 650 --seed 1");
  double overfit_s = now_s() - t0;
  if (tr.exit_code != 0) return {1, "overfit training exited " + std::to_string(tr.exit_code)};

  ModelConfig mc;
  Model<float> model = build_model<float>(mc, 0);
  load_checkpoint(ov_run + "/model.adsr", mc, model.params);
  // Same protocol the eval tool applies: luma PSNR with a scale-sized border crop.
  EvalProtocol proto;
  proto.channel = EvalProtocol::Channel::kY;
  proto.border_crop = 2;
  EvalRow row = score_pair("crop", infer_image(model, lr), hr, proto);
  if (!(row.psnr > 35.0)) {
    return {1, "overfit PSNR " + fmt(row.psnr) + " dB <= 35 dB after 2000 steps"};
  }
  if (overfit_s >= 600.0) {
    return {1, "overfit run took " + fmt(overfit_s) + "s (budget 600s)"};
  }

  // Averaged over disjoint 200-step windows, the loss must fall between every
  // consecutive pair of windows.
  {
    std::ifstream log(ov_run + "/train_log.tsv");
    std::vector<double> loss;
    std::string line;
    while (std::getline(log, line)) {
      std::size_t a = line.find('\t');
      if (a == std::string::npos) continue;
      std::size_t b = line.find('\t', a + 1);
      loss.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    if (loss.size() != 2000) {
      return {1, "overfit log has " + std::to_string(loss.size()) + " steps, expected 2000"};
    }
    double prev = 0.0;
    for (int w = 0; w < 10; ++w) {
      double mean = 0.0;
      for (int i = 0; i < 200; ++i) mean += loss[w * 200 + i];
      mean /= 200.0;
      if (w > 0 && !(mean < prev)) {
        return {1, "mean loss over steps [" + std::to_string(w * 200) + "," +
                       std::to_string(w * 200 + 200) + ") is " + sci(mean) +
                       ", not below the previous window's " + sci(prev)};
      }
      prev = mean;
    }
  }

  // (b) desk-scale training from scratch
  std::string ds = fresh_dir(opt.work, "desk_ds");
  write_split(ds, "train", 55, 96, 2, 600);
  write_split(ds, "val", 5, 120, 2, 700);

  std::string run = fresh_dir(opt.work, "desk_run");
  t0 = now_s();
  RunResult dt = run_cli(
      opt, "train --out " + run + " --data.root " + ds +
               " --train.total_steps 10000 --train.batch_size 4 --train.patch_lr 24"
               " --train.checkpoint_interval 2500 --seed 2");
  double desk_s = now_s() - t0;
  if (dt.exit_code != 0) return {1, "desk training exited " + std::to_string(dt.exit_code)};

  std::string t_model = run + "/eval_model.tsv";
  std::string t_bicubic = run + "/eval_bicubic.tsv";
  RunResult em = run_cli(opt, "eval --checkpoint " + run + "/model.adsr --data " + ds +
                                  " --split val --scale 2 --out " + t_model);
  RunResult eb = run_cli(opt, "eval --baseline bicubic --data " + ds +
                                  " --split val --scale 2 --out " + t_bicubic);
  if (em.exit_code != 0 || eb.exit_code != 0) return {1, "desk-scale eval failed"};
  MeanRow m = parse_mean(t_model);
  MeanRow b = parse_mean(t_bicubic);
  double margin = m.psnr - b.psnr;
  if (!(margin >= 0.3)) {
    return {1, "desk-scale margin " + fmt(margin) + " dB < 0.3 dB (model " + fmt(m.psnr) +
                   ", bicubic " + fmt(b.psnr) + ")"};
  }
  if (desk_s >= 7200.0) return {1, "desk run took " + fmt(desk_s) + "s (budget 7200s)"};

  return {0, "overfit " + fmt(row.psnr) + " dB in " + fmt(overfit_s) + "s; desk-scale " +
                 fmt(m.psnr) + " dB vs bicubic " + fmt(b.psnr) + " dB (+" + fmt(margin) +
                 " dB) in " + fmt(desk_s) + "s"};
}

// ---------------------------------------------------------------------------
// Criterion 6: every ablation variant constructs, runs forward at every
// scale, passes the parameter audit, and passes a small 64-bit gradcheck.

Verdict criterion_6(const Options&) {
  double t0 = now_s();
  double worst = 0.0;
  std::string worst_name;
  for (Variant v : all_variants()) {
    for (std::int64_t s : {2, 3, 4}) {
      ModelConfig mc;
      mc.variant = v;
      mc.scale = s;

      Model<double> model = build_model<double>(mc, 3);
      Rng rng(4);
      TensorT<double> x = TensorT<double>::randn(Shape4(1, 3, 6, 6), rng, 0.5);
      TensorT<double> y = model.forward(x);
      if (y.shape().n != 1 || y.shape().c != 3 || y.shape().h != 6 * s ||
          y.shape().w != 6 * s) {
        return {1, std::string(variant_name(v)) + " x" + std::to_string(s) +
                       ": bad output shape " + y.shape().str()};
      }
      if (count_parameters(mc) != model.params.element_count()) {
        return {1, std::string(variant_name(v)) + " x" + std::to_string(s) +
                       ": parameter audit failed"};
      }

      GradCheckOptions gc;
      gc.step = 5e-4;
      gc.max_samples = 3;
      GradCheckReport rep = model_gradcheck(mc, gc, 6);
      if (rep.max_rel_err > worst) {
        worst = rep.max_rel_err;
        worst_name = rep.name;
      }
      if (!(rep.max_rel_err < 1e-4)) {
        return {1, rep.name + ": gradcheck " + sci(rep.max_rel_err) + " >= 1e-4"};
      }
    }
  }
  double dt = now_s() - t0;
  return {0, "27 variant/scale combinations; worst gradcheck " + sci(worst) + " at " +
                 worst_name + " (" + fmt(dt) + "s)"};
}

// ---------------------------------------------------------------------------
// Criterion 7: fixed-seed determinism, bit-exact checkpoints, and exact
// resume, all through the real binary.

Verdict criterion_7(const Options& opt) {
  std::string ds = fresh_dir(opt.work, "det_ds");
  fs::create_directories(ds + "/train/HR");
  write_png(ds + "/train/HR/a.png", synth_scene(32, 32, 801));
  write_png(ds + "/train/HR/b.png", synth_scene(32, 32, 802));
  degrade_directory(ds + "/train/HR", 2, ds + "/train/LR_x2");

  std::string overrides = " --data.root " + ds +
                          " --train.total_steps 6 --train.batch_size 2"
                          " --train.patch_lr 8 --train.checkpoint_interval 3 --seed 9";

  std::string a = fresh_dir(opt.work, "det_a");
  std::string b = fresh_dir(opt.work, "det_b");
  if (run_cli(opt, "train --out " + a + overrides).exit_code != 0 ||
      run_cli(opt, "train --out " + b + overrides).exit_code != 0) {
    return {1, "training run failed"};
  }
  for (const char* f : {"train_log.tsv", "model.adsr", "checkpoint.adsr"}) {
    if (file_bytes(a + "/" + f) != file_bytes(b + "/" + f)) {
      return {1, std::string("fixed-seed runs differ in ") + f};
    }
  }

  // Interrupt at step 3, then resume to 6; everything must match run A.
  std::string c = fresh_dir(opt.work, "det_c");
  std::string short_overrides = overrides;
  std::size_t pos = short_overrides.find("total_steps 6");
  short_overrides.replace(pos, 13, "total_steps 3");
  if (run_cli(opt, "train --out " + c + short_overrides).exit_code != 0 ||
      run_cli(opt, "train --resume --out " + c + overrides).exit_code != 0) {
    return {1, "resume run failed"};
  }
  for (const char* f : {"train_log.tsv", "model.adsr", "checkpoint.adsr"}) {
    if (file_bytes(c + "/" + f) != file_bytes(a + "/" + f)) {
      return {1, std::string("resumed run differs from uninterrupted run in ") + f};
    }
  }

  // Round-trip through the library: loading the saved weights back must
  // reproduce them bit for bit.
  ModelConfig mc;
  Model<float> m1 = build_model<float>(mc, 9);
  Model<float> m2 = build_model<float>(mc, 10);
  load_checkpoint(a + "/model.adsr", mc, m1.params);
  load_checkpoint(a + "/model.adsr", mc, m2.params);
  for (std::size_t i = 0; i < m1.params.entries().size(); ++i) {
    if (m1.params.entries()[i].tensor.vec() != m2.params.entries()[i].tensor.vec()) {
      return {1, "checkpoint load is not bit-stable"};
    }
  }
  return {0, "fixed-seed runs, resume, and checkpoint round-trip all bit-identical"};
}

// ---------------------------------------------------------------------------
// Criterion 8: the non-reproducibility of published full-scale results at
// desk scale is documented, with criteria 1-7 standing in as the
// property-based gate.

Verdict criterion_8(const Options&) {
  std::string readme = std::string(ADSRNET_SOURCE_DIR) + "/README.md";
  std::ifstream is(readme);
  if (!is) return {1, "README.md missing"};
  std::stringstream ss;
  ss << is.rdbuf();
  if (ss.str().find("not reproducible at desk scale") == std::string::npos) {
    return {1, "README.md does not document the desk-scale limitation"};
  }
  return {0, "full-scale headline results documented as out of desk scope; "
             "criteria 1-7 are the substitute gate"};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  opt.work = (fs::temp_directory_path() / "adsrnet_acceptance").string();
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--criterion") {
      opt.criterion = std::atoi(next().c_str());
    } else if (arg == "--cli") {
      opt.cli = next();
    } else if (arg == "--data") {
      opt.data = next();
    } else if (arg == "--work") {
      opt.work = next();
    } else {
      std::cerr << "unknown flag " << arg << "\n";
      return 2;
    }
  }
  fs::create_directories(opt.work);

  Verdict (*runners[])(const Options&) = {criterion_1, criterion_2, criterion_3,
                                          criterion_4, criterion_5, criterion_6,
                                          criterion_7, criterion_8};

  int failed = 0, skipped = 0;
  for (int n = 1; n <= 8; ++n) {
    if (opt.criterion != 0 && opt.criterion != n) continue;
    Verdict v;
    try {
      v = runners[n - 1](opt);
    } catch (const std::exception& e) {
      v = {1, std::string("exception: ") + e.what()};
    }
    const char* tag = v.code == 0 ? "PASS" : v.code == 77 ? "SKIP" : "FAIL";
    std::cout << "criterion " << n << ": " << tag << " - " << v.detail << std::endl;
    failed += v.code != 0 && v.code != 77;
    skipped += v.code == 77;
  }
  if (failed) return 1;
  if (opt.criterion != 0 && skipped) return 77;
  return 0;
}
