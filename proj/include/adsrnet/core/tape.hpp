#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

/// Where one op input's gradient contribution goes during backward:
/// into the per-node scratch buffer of the producing op (intermediate) or
/// into the input's persistent GradSlot (leaf). Built at record time so
/// closures never touch Tensor handles.
template <typename T>
struct GradTarget {
  std::int64_t node = -1;
  std::shared_ptr<GradSlot<T>> slot;
  std::int64_t numel = 0;

  bool wants() const { return node >= 0 || slot != nullptr; }
};

/// Hands gradient buffers to op gradient functions during a backward
/// sweep. accum_ptr returns a zero-initialized buffer of target.numel
/// elements to accumulate into, or nullptr when the target tracks nothing.
template <typename T>
class GradSink {
 public:
  explicit GradSink(std::vector<std::vector<T>>& node_bufs) : node_bufs_(node_bufs) {}

  T* accum_ptr(const GradTarget<T>& target) {
    if (target.node >= 0) {
      auto& buf = node_bufs_[static_cast<std::size_t>(target.node)];
      if (buf.empty()) buf.assign(static_cast<std::size_t>(target.numel), T(0));
      return buf.data();
    }
    if (target.slot) {
      target.slot->ensure(target.numel);
      return target.slot->g.data();
    }
    return nullptr;
  }

 private:
  std::vector<std::vector<T>>& node_bufs_;
};

/// Per-forward-pass gradient tape. Constructing one makes it the active
/// tape for the current thread (RAII, nestable); ops record a node on the
/// active tape when any input is tracked. backward() seeds the root with
/// gradient 1 and sweeps the nodes in exact reverse creation order, which
/// is a valid topological order because nodes only consume earlier nodes.
/// Each node's gradient function runs at most once per sweep.
///
/// Intermediate gradients live in scratch buffers owned by the sweep and
/// are freed as soon as their node has run; only leaf GradSlots persist.
/// Running backward twice therefore accumulates into every leaf twice.
template <typename T>
class GradientTape {
 public:
  using GradFn = std::function<void(const T* upstream, GradSink<T>& sink)>;

  GradientTape() { stack().push_back(this); }

  ~GradientTape() { stack().pop_back(); }

  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* current() {
    return stack().empty() ? nullptr : stack().back();
  }

  // True when backward through this tape can reach a gradient via t:
  // t is a leaf that wants gradients, or an op output recorded here.
  bool tracked(const TensorT<T>& t) const {
    return t.requires_grad() || (t.tape() == this && t.node() >= 0);
  }

  GradTarget<T> target(const TensorT<T>& t) const {
    GradTarget<T> g;
    g.numel = t.numel();
    if (t.tape() == this && t.node() >= 0) {
      g.node = t.node();
    } else if (t.requires_grad()) {
      g.slot = t.grad_slot();
    }
    return g;
  }

  // Appends a node and stamps the output tensor with its provenance.
  void record(TensorT<T>& out, GradFn fn) {
    nodes_.push_back(Node{std::move(fn), out.numel(), nullptr});
    out.set_provenance(this, static_cast<std::int64_t>(nodes_.size()) - 1);
  }

  // Lets a recorded output also accumulate into a persistent slot, so
  // requires_grad set on an intermediate behaves like a leaf observer.
  void attach_slot(std::int64_t node, std::shared_ptr<GradSlot<T>> slot) {
    nodes_[static_cast<std::size_t>(node)].out_slot = std::move(slot);
  }

  std::size_t size() const { return nodes_.size(); }

  void backward(const TensorT<T>& root) {
    if (root.numel() != 1) {
      throw std::invalid_argument(detail::str_cat(
          "backward: root must be scalar, got shape ", root.shape().str()));
    }

    std::vector<std::vector<T>> node_bufs(nodes_.size());
    if (root.tape() == this && root.node() >= 0) {
      node_bufs[static_cast<std::size_t>(root.node())].assign(1, T(1));
    } else if (root.requires_grad()) {
      root.grad_slot()->ensure(1);
      root.grad_slot()->g[0] += T(1);
      return;
    } else {
      return;
    }

    GradSink<T> sink(node_bufs);
    for (std::int64_t i = static_cast<std::int64_t>(nodes_.size()) - 1; i >= 0; --i) {
      auto& buf = node_bufs[static_cast<std::size_t>(i)];
      if (buf.empty()) continue;
      Node& node = nodes_[static_cast<std::size_t>(i)];
      if (node.out_slot) {
        node.out_slot->ensure(node.out_numel);
        for (std::int64_t k = 0; k < node.out_numel; ++k) {
          node.out_slot->g[static_cast<std::size_t>(k)] += buf[static_cast<std::size_t>(k)];
        }
      }
      node.fn(buf.data(), sink);
      std::vector<T>().swap(buf);
    }
  }

 private:
  struct Node {
    GradFn fn;
    std::int64_t out_numel;
    std::shared_ptr<GradSlot<T>> out_slot;
  };

  static std::vector<GradientTape*>& stack() {
    static thread_local std::vector<GradientTape*> s;
    return s;
  }

  std::vector<Node> nodes_;
};

// Convenience used by every op: the active tape when at least one of the
// given inputs is tracked on it, otherwise nullptr (record nothing).
template <typename T>
GradientTape<T>* tape_for(std::initializer_list<const TensorT<T>*> inputs) {
  GradientTape<T>* tape = GradientTape<T>::current();
  if (!tape) return nullptr;
  for (const TensorT<T>* t : inputs) {
    if (tape->tracked(*t)) return tape;
  }
  return nullptr;
}

}  // namespace adsrnet
