#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "adsrnet/core/tensor.hpp"

namespace adsrnet {

/// Ordered collection of named trainable tensors. Entries are handles
/// sharing storage and grad slots with the live network layers, so
/// optimizer updates through the set are visible to the model and vice
/// versa. Iteration order is construction order, identical across runs.
template <typename T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    TensorT<T> tensor;
  };

  void add(const std::string& name, const TensorT<T>& tensor) {
    if (index_.count(name)) {
      throw std::invalid_argument(detail::str_cat(
          "ParameterSet: duplicate parameter name '", name, "'"));
    }
    index_[name] = entries_.size();
    entries_.push_back(Entry{name, tensor});
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const TensorT<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::invalid_argument(detail::str_cat(
          "ParameterSet: no parameter named '", name, "'"));
    }
    return entries_[it->second].tensor;
  }

  std::size_t size() const { return entries_.size(); }

  std::int64_t element_count() const {
    std::int64_t total = 0;
    for (const Entry& e : entries_) total += e.tensor.numel();
    return total;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grads() {
    for (Entry& e : entries_) e.tensor.zero_grad();
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace adsrnet
