#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adsrnet/core/rng.hpp"
#include "adsrnet/core/tape.hpp"
#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

struct GradCheckOptions {
  double step = 1e-4;
  std::int64_t max_samples = 20;
  std::uint64_t seed = 1234;
  // Relative error uses max(floor, |analytic|, |numeric|) as denominator
  // so near-zero gradients are compared absolutely.
  double floor = 1e-6;
};

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
};

/// Central-difference check of analytic gradients. loss_fn must
/// re-evaluate the full computation from the current leaf values and
/// return a scalar; leaves are the tracked tensors whose storage loss_fn
/// reads (handles sharing that storage). One taped backward pass collects
/// analytic gradients, then up to max_samples coordinates per leaf are
/// probed with x +- step and compared.
template <typename T>
std::vector<GradCheckReport> gradcheck(
    const std::function<TensorT<T>()>& loss_fn,
    const std::vector<std::pair<std::string, TensorT<T>>>& leaves,
    const GradCheckOptions& opt = GradCheckOptions{}) {
  for (const auto& [name, leaf] : leaves) {
    if (!leaf.requires_grad()) {
      throw std::invalid_argument(detail::str_cat(
          "gradcheck: leaf '", name, "' does not require gradients"));
    }
    const_cast<TensorT<T>&>(leaf).zero_grad();
  }

  {
    GradientTape<T> tape;
    TensorT<T> loss = loss_fn();
    tape.backward(loss);
  }

  std::vector<std::vector<T>> analytic;
  for (const auto& [name, leaf] : leaves) {
    analytic.push_back(leaf.has_grad()
                           ? leaf.grad()
                           : std::vector<T>(static_cast<std::size_t>(leaf.numel()), T(0)));
  }

  Rng rng(opt.seed);
  std::vector<GradCheckReport> reports;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const auto& [name, leaf] = leaves[li];
    TensorT<T>& probe = const_cast<TensorT<T>&>(leaf);
    std::int64_t numel = leaf.numel();

    std::vector<std::int64_t> idxs;
    if (numel <= opt.max_samples) {
      for (std::int64_t i = 0; i < numel; ++i) idxs.push_back(i);
    } else {
      for (std::int64_t i = 0; i < opt.max_samples; ++i) {
        idxs.push_back(rng.uniform_int(static_cast<std::uint32_t>(numel)));
      }
    }

    GradCheckReport rep;
    rep.name = name;
    for (std::int64_t idx : idxs) {
      T* slot = probe.data() + idx;
      T saved = *slot;
      *slot = saved + static_cast<T>(opt.step);
      double f_plus = static_cast<double>(loss_fn().item());
      *slot = saved - static_cast<T>(opt.step);
      double f_minus = static_cast<double>(loss_fn().item());
      *slot = saved;
      double fd = (f_plus - f_minus) / (2.0 * opt.step);
      double an = static_cast<double>(analytic[li][static_cast<std::size_t>(idx)]);
      double denom = std::max(opt.floor, std::max(std::abs(an), std::abs(fd)));
      double rel = std::abs(an - fd) / denom;
      if (rel > rep.max_rel_err) rep.max_rel_err = rel;
    }
    reports.push_back(rep);
  }
  return reports;
}

inline double worst_rel_err(const std::vector<GradCheckReport>& reports) {
  double worst = 0.0;
  for (const GradCheckReport& r : reports) {
    if (r.max_rel_err > worst) worst = r.max_rel_err;
  }
  return worst;
}

}  // namespace adsrnet
