#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "adsrnet/core/rng.hpp"
#include "adsrnet/core/shape.hpp"

namespace adsrnet {

template <typename T>
class GradientTape;

/// Gradient storage for a leaf tensor. Lives behind a shared_ptr so every
/// handle copy of the tensor sees the same accumulation buffer. The buffer
/// is sized on first accumulation; zero_grad() empties it again.
template <typename T>
struct GradSlot {
  std::vector<T> g;

  void ensure(std::int64_t numel) {
    if (g.empty()) {
      g.assign(static_cast<std::size_t>(numel), T(0));
    } else if (static_cast<std::int64_t>(g.size()) != numel) {
      throw std::logic_error("GradSlot: accumulation size mismatch");
    }
  }
};

/// Dense 4-d tensor with value-semantics handles over shared storage.
/// Copying a tensor copies the handle, not the buffer; ops never mutate
/// their inputs' data. Gradient tracking has two layers:
///   - a leaf opts in with set_requires_grad(true), which attaches a
///     GradSlot that backward passes accumulate into additively;
///   - an op output carries provenance (tape + node id) when it was
///     recorded on the currently active GradientTape.
template <typename T>
class TensorT {
 public:
  using value_type = T;

  TensorT() = default;

  explicit TensorT(Shape4 shape)
      : shape_(shape),
        data_(std::make_shared<std::vector<T>>(
            static_cast<std::size_t>(check_shape(shape).numel()), T(0))) {}

  TensorT(Shape4 shape, std::vector<T> values) : shape_(check_shape(shape)) {
    if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
      throw std::invalid_argument(detail::str_cat(
          "Tensor: value count ", values.size(), " does not fill shape ",
          shape.str()));
    }
    data_ = std::make_shared<std::vector<T>>(std::move(values));
  }

  static TensorT zeros(Shape4 shape) { return TensorT(shape); }

  static TensorT full(Shape4 shape, T value) {
    TensorT t(shape);
    for (auto& v : *t.data_) v = value;
    return t;
  }

  static TensorT scalar(T value) { return full(Shape4(1, 1, 1, 1), value); }

  // Zero-mean normal entries with the given standard deviation, drawn in
  // a fixed order so a fixed rng state gives bit-identical tensors.
  static TensorT randn(Shape4 shape, Rng& rng, double stddev = 1.0) {
    TensorT t(shape);
    for (auto& v : *t.data_) v = static_cast<T>(rng.normal() * stddev);
    return t;
  }

  const Shape4& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }
  bool defined() const { return data_ != nullptr; }

  const T* data() const { return data_->data(); }
  T* data() { return data_->data(); }
  const std::vector<T>& vec() const { return *data_; }

  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return (*data_)[static_cast<std::size_t>(shape_.index(n, c, h, w))];
  }
  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return (*data_)[static_cast<std::size_t>(shape_.index(n, c, h, w))];
  }

  // Scalar read; the tensor must hold exactly one element.
  T item() const {
    if (numel() != 1) {
      throw std::invalid_argument(detail::str_cat(
          "Tensor::item: shape ", shape_.str(), " is not scalar"));
    }
    return (*data_)[0];
  }

  // Deep copy of the value buffer; the copy is an untracked constant.
  TensorT clone() const {
    TensorT t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<std::vector<T>>(*data_);
    return t;
  }

  // Same storage, stripped of grad slot and provenance.
  TensorT detached() const {
    TensorT t;
    t.shape_ = shape_;
    t.data_ = data_;
    return t;
  }

  bool requires_grad() const { return gslot_ != nullptr; }

  void set_requires_grad(bool on) {
    if (on && !gslot_) {
      gslot_ = std::make_shared<GradSlot<T>>();
    } else if (!on) {
      gslot_.reset();
    }
  }

  bool has_grad() const { return gslot_ && !gslot_->g.empty(); }

  const std::vector<T>& grad() const {
    if (!has_grad()) {
      throw std::runtime_error("Tensor::grad: no gradient has been accumulated");
    }
    return gslot_->g;
  }

  void zero_grad() {
    if (gslot_) gslot_->g.clear();
  }

  std::shared_ptr<GradSlot<T>> grad_slot() const { return gslot_; }
  std::shared_ptr<std::vector<T>> storage() const { return data_; }

  // Provenance of an op output: the tape it was recorded on and its node
  // id there. Set by the op recording machinery only.
  GradientTape<T>* tape() const { return tape_; }
  std::int64_t node() const { return node_; }
  void set_provenance(GradientTape<T>* tape, std::int64_t node) {
    tape_ = tape;
    node_ = node;
  }

 private:
  static Shape4 check_shape(Shape4 s) {
    if (!s.valid()) {
      throw std::invalid_argument(detail::str_cat(
          "Tensor: every extent must be positive, got ", s.str()));
    }
    return s;
  }

  Shape4 shape_{};
  std::shared_ptr<std::vector<T>> data_;
  std::shared_ptr<GradSlot<T>> gslot_;
  GradientTape<T>* tape_ = nullptr;
  std::int64_t node_ = -1;
};

using Tensor = TensorT<float>;

template <typename T>
void check_same_shape(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument(detail::str_cat(
        op, ": shape mismatch ", a.shape().str(), " vs ", b.shape().str()));
  }
}

}  // namespace adsrnet
