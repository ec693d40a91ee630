#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adsrnet/core/rng.hpp"
#include "adsrnet/core/tape.hpp"
#include "adsrnet/model/network.hpp"
#include "adsrnet/ops/dynamic_conv.hpp"
#include "adsrnet/train/adam.hpp"
#include "adsrnet/train/checkpoint.hpp"
#include "adsrnet/train/loss.hpp"
#include "adsrnet/train/sampler.hpp"

namespace adsrnet {

/// Optimization hyperparameters. beta/lr defaults follow the training
/// recipe this implements; total_steps and patch_lr are desk-scale
/// defaults (full-scale runs override them).
struct TrainConfig {
  std::int64_t batch_size = 64;
  double lr_initial = 1e-4;
  std::int64_t lr_halving_period = 300000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t total_steps = 10000;
  std::int64_t patch_lr = 48;
  bool augment = true;
  std::int64_t checkpoint_interval = 1000;
  double tau_start = 30.0;
  double tau_end = 1.0;
  std::int64_t tau_anneal_steps = 0;  // 0 resolves to total_steps / 10
  std::uint64_t seed = 0;

  TemperatureSchedule tau_schedule() const {
    TemperatureSchedule s;
    s.tau_start = tau_start;
    s.tau_end = tau_end;
    s.anneal_steps = tau_anneal_steps > 0 ? tau_anneal_steps
                                          : std::max<std::int64_t>(1, total_steps / 10);
    return s;
  }

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (patch_lr < 1) throw std::invalid_argument("train: patch_lr must be >= 1");
    if (total_steps < 0) throw std::invalid_argument("train: total_steps must be >= 0");
    if (checkpoint_interval < 1) {
      throw std::invalid_argument("train: checkpoint_interval must be >= 1");
    }
    if (!(lr_initial > 0.0)) throw std::invalid_argument("train: lr_initial must be > 0");
    if (lr_halving_period < 1) {
      throw std::invalid_argument("train: lr_halving_period must be >= 1");
    }
  }
};

struct TrainResult {
  std::int64_t final_step = 0;
  double final_loss = 0.0;
};

/// One optimization step at absolute index `step`: draw the batch from
/// the per-step stream, run forward + MAE + backward, apply Adam. The
/// per-step seeding makes the batch sequence a pure function of (seed,
/// step), which is what lets a resumed run replay the exact batches an
/// uninterrupted run would have seen.
template <typename T>
double train_step(Model<T>& model, Adam<T>& opt, const TrainConfig& tc,
                  const std::vector<ImagePair>& images, std::int64_t step) {
  model.set_temperature(temperature_at(step, tc.tau_schedule()));

  Rng rng(step_seed(tc.seed, static_cast<std::uint64_t>(step)));
  TensorT<T> lr_batch, hr_batch;
  sample_batch(images, tc.batch_size, tc.patch_lr, rng, tc.augment, lr_batch, hr_batch);

  model.params.zero_grads();
  double loss_value = 0.0;
  {
    GradientTape<T> tape;
    TensorT<T> pred = model.forward(lr_batch);
    TensorT<T> loss = mae_loss(pred, hr_batch);
    loss_value = static_cast<double>(loss.item());
    tape.backward(loss);
  }
  if (!std::isfinite(loss_value)) {
    throw std::runtime_error(detail::str_cat(
        "training diverged: non-finite loss at step ", step));
  }
  opt.step(model.params, lr_at(step, tc.lr_initial, tc.lr_halving_period));
  return loss_value;
}

inline std::string format_log_value(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

/// Runs steps [opt.step_count(), total_steps), appending one
/// `step<TAB>loss<TAB>lr<TAB>tau` record per step to the log and writing
/// checkpoint.adsr (with optimizer state) every checkpoint_interval
/// steps and at completion, plus model.adsr (parameters only) at
/// completion. Resume = load checkpoint.adsr into (model, opt) first.
template <typename T>
TrainResult train_loop(Model<T>& model, Adam<T>& opt, const TrainConfig& tc,
                       const std::vector<ImagePair>& images,
                       const std::string& out_dir, std::ostream& log) {
  tc.validate();
  if (images.empty()) throw std::runtime_error("train: dataset is empty");
  for (const ImagePair& pair : images) {
    if (pair.lr.h < tc.patch_lr || pair.lr.w < tc.patch_lr) {
      throw std::runtime_error(detail::str_cat(
          "train: image ", pair.source, " (", pair.lr.w, "x", pair.lr.h,
          " LR) is smaller than patch_lr ", tc.patch_lr));
    }
  }
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string train_ckpt = (fs::path(out_dir) / "checkpoint.adsr").string();
  std::string model_ckpt = (fs::path(out_dir) / "model.adsr").string();

  opt.ensure_state(model.params);
  TrainResult result;
  result.final_step = opt.step_count();

  for (std::int64_t step = opt.step_count(); step < tc.total_steps; ++step) {
    double loss = train_step(model, opt, tc, images, step);
    double lr = lr_at(step, tc.lr_initial, tc.lr_halving_period);
    double tau = temperature_at(step, tc.tau_schedule());
    log << step << '\t' << format_log_value(loss) << '\t' << format_log_value(lr)
        << '\t' << format_log_value(tau) << '\n';
    log.flush();
    result.final_step = step + 1;
    result.final_loss = loss;
    if ((step + 1) % tc.checkpoint_interval == 0 && step + 1 < tc.total_steps) {
      save_checkpoint(train_ckpt, model.config, model.params, &opt);
    }
  }

  save_checkpoint(train_ckpt, model.config, model.params, &opt);
  save_checkpoint<T>(model_ckpt, model.config, model.params, nullptr);
  return result;
}

}  // namespace adsrnet
