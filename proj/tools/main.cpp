#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "adsrnet/cli/run_config.hpp"
#include "adsrnet/core/parallel.hpp"
#include "adsrnet/data/dataset.hpp"
#include "adsrnet/data/png_io.hpp"
#include "adsrnet/metrics/evaluate.hpp"
#include "adsrnet/model/accounting.hpp"
#include "adsrnet/model/gradcheck_suite.hpp"
#include "adsrnet/model/network.hpp"
#include "adsrnet/train/checkpoint.hpp"
#include "adsrnet/train/trainer.hpp"

namespace {

using namespace adsrnet;
namespace fs = std::filesystem;

// Config overrides arrive as the subcommand's unparsed arguments:
// `--key value` or `--key=value` pairs for registered RunConfig keys.
void apply_overrides(RunConfig& rc, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
      throw std::runtime_error(detail::str_cat(
          "unexpected argument '", tok, "' (config overrides look like --key value)"));
    }
    std::string key = tok.substr(2);
    std::size_t eq = key.find('=');
    if (eq != std::string::npos) {
      rc.set(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) {
      throw std::runtime_error(detail::str_cat("missing value for override --", key));
    }
    rc.set(key, extras[++i]);
  }
}

RunConfig resolve_config(const std::string& config_path,
                         const std::vector<std::string>& extras) {
  RunConfig rc;
  if (!config_path.empty()) rc.load_file(config_path);
  apply_overrides(rc, extras);
  return rc;
}

void echo_config(const RunConfig& rc) {
  std::cerr << "resolved config:\n" << rc.echo();
}

std::vector<ImagePair> load_training_set(const DatasetIndex& idx) {
  for (const std::string& name : idx.unpaired) {
    std::cerr << "warning: " << name << " has no HR/LR counterpart, skipping\n";
  }
  std::vector<ImagePair> images;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    try {
      images.push_back(load_pair(idx, i));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << idx.names[i] << ": " << e.what() << "\n";
    }
  }
  return images;
}

std::string format_rel_err(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

int cmd_degrade(const std::string& hr, std::int64_t scale, const std::string& out) {
  DegradeResult res = degrade_directory(hr, scale, out);
  std::cerr << "degraded " << res.written << " image(s), " << res.failed
            << " failure(s) -> " << out << "\n";
  if (res.written == 0) {
    std::cerr << "error: no images degraded from " << hr << "\n";
    return 1;
  }
  return 0;
}

int cmd_train(const RunConfig& rc, const std::string& out, bool resume) {
  echo_config(rc);
  ModelConfig mc = rc.model_config();
  TrainConfig tc = rc.train_config();
  std::string root = rc.get("data.root");
  if (root.empty()) {
    throw std::runtime_error("train: data.root is not set (pass --data.root or a config file)");
  }

  DatasetIndex idx = index_dataset(root, rc.get("data.train_split"), mc.scale);
  std::vector<ImagePair> images = load_training_set(idx);
  std::cerr << "training set: " << images.size() << " pair(s) from " << idx.hr_dir << "\n";

  Model<float> model = build_model<float>(mc, tc.seed);
  Adam<float> opt(tc.beta1, tc.beta2, tc.epsilon);

  fs::create_directories(out);
  fs::path ckpt = fs::path(out) / "checkpoint.adsr";
  if (resume) {
    if (!fs::exists(ckpt)) {
      throw std::runtime_error(detail::str_cat(
          "--resume: no checkpoint at ", ckpt.string()));
    }
    load_checkpoint(ckpt.string(), mc, model.params, &opt);
    std::cerr << "resumed from step " << opt.step_count() << "\n";
  }

  fs::path log_path = fs::path(out) / "train_log.tsv";
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log) {
    throw std::runtime_error(detail::str_cat("cannot open log ", log_path.string()));
  }

  TrainResult res = train_loop(model, opt, tc, images, out, log);
  std::cerr << "done: step " << res.final_step << ", loss "
            << format_log_value(res.final_loss) << ", checkpoints under " << out << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& checkpoint,
             const std::string& baseline, bool self_test, const std::string& out_file) {
  echo_config(rc);
  ModelConfig mc = rc.model_config();
  EvalProtocol proto = rc.eval_protocol();
  std::cerr << "protocol: channel="
            << (proto.channel == EvalProtocol::Channel::kY ? "y" : "rgb")
            << " border_crop=" << proto.border_crop << " peak=" << proto.peak << "\n";

  DatasetIndex idx = index_dataset(rc.get("data.root"), rc.get("data.eval_split"), mc.scale);

  Model<float> model;
  std::function<Image8(const ImagePair&)> sr_fn;
  if (self_test) {
    sr_fn = [](const ImagePair& pair) { return pair.hr; };
  } else if (!baseline.empty()) {
    std::int64_t scale = mc.scale;
    sr_fn = [scale](const ImagePair& pair) { return bicubic_upscale(pair.lr, scale); };
  } else if (!checkpoint.empty()) {
    model = build_model<float>(mc, static_cast<std::uint64_t>(rc.get_i64("seed")));
    load_checkpoint(checkpoint, mc, model.params);
    sr_fn = [&model](const ImagePair& pair) { return infer_image(model, pair.lr); };
  } else {
    throw std::runtime_error("eval: provide --checkpoint, --baseline bicubic, or --self-test");
  }

  EvalReport report = evaluate_dataset(idx, proto, sr_fn);
  std::string table = format_report(report);
  std::cout << table;
  if (!out_file.empty()) {
    std::ofstream os(out_file);
    if (!os) throw std::runtime_error(detail::str_cat("cannot write ", out_file));
    os << table;
  }
  if (report.rows.empty()) {
    std::cerr << "error: no pairs evaluated under " << idx.hr_dir << "\n";
    return 1;
  }
  return 0;
}

int cmd_infer(const RunConfig& rc, const std::string& checkpoint,
              const std::string& in, const std::string& out) {
  echo_config(rc);
  ModelConfig mc = rc.model_config();
  Model<float> model = build_model<float>(mc, static_cast<std::uint64_t>(rc.get_i64("seed")));
  load_checkpoint(checkpoint, mc, model.params);

  Image8 lr = read_png(in);
  Image8 sr = infer_image(model, lr);
  write_png(out, sr);
  std::cerr << "wrote " << out << " (" << sr.w << "x" << sr.h << ", x" << mc.scale << ")\n";
  return 0;
}

int cmd_params(const RunConfig& rc, std::int64_t out_h, std::int64_t out_w, bool list) {
  echo_config(rc);
  ModelConfig mc = rc.model_config();
  std::int64_t analytic = count_parameters(mc);
  Model<float> model = build_model<float>(mc, static_cast<std::uint64_t>(rc.get_i64("seed")));
  std::int64_t live = model.params.element_count();
  std::int64_t flops = estimate_flops(mc, out_h, out_w);

  std::cout << "variant\t" << variant_name(mc.variant) << "\n"
            << "scale\t" << mc.scale << "\n"
            << "k\t" << mc.k << "\n"
            << "fusion\t" << fusion_name(mc.fusion) << "\n"
            << "analytic_params\t" << analytic << "\n"
            << "live_params\t" << live << "\n"
            << "flops_output\t" << out_w << "x" << out_h << "\n"
            << "flops\t" << flops << "\n";
  if (list) {
    for (const auto& entry : model.params.entries()) {
      std::cout << entry.name << "\t" << entry.tensor.shape().str() << "\t"
                << entry.tensor.numel() << "\n";
    }
  }
  if (live != analytic) {
    std::cerr << "error: live parameter count " << live
              << " disagrees with analytic count " << analytic << "\n";
    return 1;
  }
  return 0;
}

int cmd_gradcheck(const RunConfig& rc, double threshold, double step,
                  std::int64_t samples, double model_step, std::int64_t model_samples,
                  std::int64_t input_hw, std::uint64_t seed) {
  echo_config(rc);
  ModelConfig mc = rc.model_config();

  GradCheckOptions op_opt;
  op_opt.step = step;
  op_opt.max_samples = samples;
  op_opt.seed = seed;

  std::vector<GradCheckReport> reports = op_gradchecks(op_opt);

  GradCheckOptions m_opt = op_opt;
  m_opt.step = model_step;
  m_opt.max_samples = model_samples;
  reports.push_back(model_gradcheck(mc, m_opt, input_hw));

  bool ok = true;
  for (const GradCheckReport& r : reports) {
    bool pass = r.max_rel_err <= threshold;
    ok = ok && pass;
    std::cout << r.name << "\t" << format_rel_err(r.max_rel_err) << "\t"
              << (pass ? "ok" : "FAIL") << "\n";
  }
  std::cout << "worst\t" << format_rel_err(worst_rel_err(reports)) << "\t"
            << (ok ? "ok" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADSRNet single-image super-resolution toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 1;
  auto common = [&](CLI::App* sub, bool takes_config) {
    sub->add_option("--threads", threads, "worker threads (1 = fully deterministic)")
        ->check(CLI::PositiveNumber);
    if (takes_config) {
      sub->add_option("--config", config_path, "key=value config file");
      sub->allow_extras();
    }
  };

  auto* degrade = app.add_subcommand(
      "degrade", "Bicubic-downscale a directory of HR PNGs");
  std::string dg_hr, dg_out;
  std::int64_t dg_scale = 0;
  degrade->add_option("--hr", dg_hr, "directory of HR PNGs")->required();
  degrade->add_option("--scale", dg_scale, "downscale factor")
      ->required()
      ->check(CLI::IsMember({2, 3, 4}));
  degrade->add_option("--out", dg_out, "output directory for LR PNGs")->required();
  common(degrade, false);

  auto* train = app.add_subcommand("train", "Train a model");
  std::string tr_out;
  bool tr_resume = false;
  train->add_option("--out", tr_out, "output directory (checkpoints, log)")->required();
  train->add_flag("--resume", tr_resume, "resume from --out/checkpoint.adsr");
  common(train, true);

  auto* eval = app.add_subcommand("eval", "Evaluate PSNR/SSIM over a dataset split");
  std::string ev_checkpoint, ev_baseline, ev_data, ev_split, ev_out;
  std::int64_t ev_scale = 0;
  bool ev_self_test = false;
  eval->add_option("--checkpoint", ev_checkpoint, "model checkpoint to score");
  eval->add_option("--baseline", ev_baseline, "score a zero-training baseline")
      ->check(CLI::IsMember({"bicubic"}));
  eval->add_flag("--self-test", ev_self_test,
                 "score HR against itself (expects inf PSNR, SSIM 1)");
  eval->add_option("--data", ev_data, "dataset root (shorthand for --data.root)");
  eval->add_option("--split", ev_split, "split name (shorthand for --data.eval_split)");
  eval->add_option("--scale", ev_scale, "scale factor (shorthand for --model.scale)")
      ->check(CLI::IsMember({2, 3, 4}));
  eval->add_option("--out", ev_out, "also write the table to this file");
  common(eval, true);

  auto* infer = app.add_subcommand("infer", "Super-resolve one PNG");
  std::string in_checkpoint, in_input, in_output;
  infer->add_option("--checkpoint", in_checkpoint, "model checkpoint")->required();
  infer->add_option("--in", in_input, "input LR PNG")->required();
  infer->add_option("--out", in_output, "output SR PNG")->required();
  common(infer, true);

  auto* params = app.add_subcommand(
      "params", "Print analytic/live parameter counts and a FLOPs estimate");
  std::int64_t pa_h = 1024, pa_w = 1024;
  bool pa_list = false;
  params->add_option("--out-h", pa_h, "output height for the FLOPs estimate")
      ->check(CLI::PositiveNumber);
  params->add_option("--out-w", pa_w, "output width for the FLOPs estimate")
      ->check(CLI::PositiveNumber);
  params->add_flag("--list", pa_list, "list every parameter tensor");
  common(params, true);

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference gradient verification (64-bit)");
  double gc_threshold = 1e-4, gc_step = 1e-4, gc_model_step = 5e-4;
  std::int64_t gc_samples = 20, gc_model_samples = 6, gc_hw = 8;
  std::uint64_t gc_seed = 1234;
  gradcheck->add_option("--threshold", gc_threshold, "max allowed relative error");
  gradcheck->add_option("--step", gc_step, "finite-difference step for op checks");
  gradcheck->add_option("--model-step", gc_model_step,
                        "finite-difference step for the full-model check");
  gradcheck->add_option("--samples", gc_samples, "coordinates probed per op leaf");
  gradcheck->add_option("--model-samples", gc_model_samples,
                        "coordinates probed per model parameter");
  gradcheck->add_option("--hw", gc_hw, "model check input height/width");
  gradcheck->add_option("--seed", gc_seed, "probe RNG seed");
  common(gradcheck, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    set_global_threads(threads);
    if (*degrade) return cmd_degrade(dg_hr, dg_scale, dg_out);
    if (*train) {
      return cmd_train(resolve_config(config_path, train->remaining()), tr_out, tr_resume);
    }
    if (*eval) {
      RunConfig rc = resolve_config(config_path, eval->remaining());
      if (!ev_data.empty()) rc.set("data.root", ev_data);
      if (!ev_split.empty()) rc.set("data.eval_split", ev_split);
      if (ev_scale != 0) rc.set("model.scale", std::to_string(ev_scale));
      return cmd_eval(rc, ev_checkpoint, ev_baseline, ev_self_test, ev_out);
    }
    if (*infer) {
      return cmd_infer(resolve_config(config_path, infer->remaining()), in_checkpoint,
                       in_input, in_output);
    }
    if (*params) {
      return cmd_params(resolve_config(config_path, params->remaining()), pa_h, pa_w,
                        pa_list);
    }
    if (*gradcheck) {
      return cmd_gradcheck(resolve_config(config_path, gradcheck->remaining()),
                           gc_threshold, gc_step, gc_samples, gc_model_step,
                           gc_model_samples, gc_hw, gc_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
