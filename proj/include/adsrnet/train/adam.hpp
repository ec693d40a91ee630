#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "adsrnet/model/parameters.hpp"

namespace adsrnet {

// Step-decay schedule: the initial rate halves after every full period.
// step counts from 0, so the halving takes effect exactly at step = period.
inline double lr_at(std::int64_t step, double lr_initial, std::int64_t halving_period) {
  if (step < 0) throw std::invalid_argument("lr_at: step must be >= 0");
  if (halving_period < 1) throw std::invalid_argument("lr_at: period must be >= 1");
  return lr_initial * std::pow(0.5, static_cast<double>(step / halving_period));
}

/// Adam with bias correction folded into the step size:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   p <- p - lr * sqrt(1-b2^t)/(1-b1^t) * m / (sqrt(v) + eps)
/// Moment buffers are allocated on the first step in parameter order and
/// keyed by position, so the same ParameterSet layout must be used for
/// the optimizer's whole life (checkpoint loading restores by position).
template <typename T>
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(ParameterSet<T>& params, double lr) {
    ensure_state(params);
    ++t_;
    double corr = std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_))) /
                  (1.0 - std::pow(beta1_, static_cast<double>(t_)));
    double alpha = lr * corr;

    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& entry = params.entries()[i];
      if (!entry.tensor.has_grad()) {
        throw std::runtime_error(detail::str_cat(
            "Adam: parameter '", entry.name, "' has no gradient"));
      }
      const std::vector<T>& g = entry.tensor.grad();
      std::vector<T>& m = m_[i];
      std::vector<T>& v = v_[i];
      T* p = entry.tensor.data();
      T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
      T a = static_cast<T>(alpha), eps = static_cast<T>(epsilon_);
      for (std::size_t j = 0; j < g.size(); ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        p[j] -= a * m[j] / (std::sqrt(v[j]) + eps);
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return epsilon_; }

  // Checkpoint access. Buffers are in parameter order; restore must be
  // preceded by ensure_state on the same layout.
  std::vector<std::vector<T>>& m_buffers() { return m_; }
  std::vector<std::vector<T>>& v_buffers() { return v_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  void ensure_state(const ParameterSet<T>& params) {
    if (!m_.empty()) {
      if (m_.size() != params.size()) {
        throw std::runtime_error("Adam: optimizer state does not match parameter set");
      }
      return;
    }
    for (const auto& entry : params.entries()) {
      m_.emplace_back(static_cast<std::size_t>(entry.tensor.numel()), T(0));
      v_.emplace_back(static_cast<std::size_t>(entry.tensor.numel()), T(0));
    }
  }

 private:
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

}  // namespace adsrnet
