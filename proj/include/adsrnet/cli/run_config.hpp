#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsrnet/metrics/evaluate.hpp"
#include "adsrnet/model/config.hpp"
#include "adsrnet/train/trainer.hpp"

namespace adsrnet {

/// Flat key=value run configuration: defaults, overlaid by an optional
/// config file (one pair per line, '#' comments), overlaid by command
/// line overrides. Keys outside the registry are rejected, values are
/// parsed when the typed accessors run, and echo() emits every resolved
/// pair in sorted order.
class RunConfig {
 public:
  RunConfig() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"model.scale", "2"},
        {"model.variant", "full"},
        {"model.k", "4"},
        {"model.fusion", "multiply"},
        {"train.batch_size", "64"},
        {"train.lr_initial", "1e-4"},
        {"train.lr_halving_period", "300000"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.epsilon", "1e-8"},
        {"train.total_steps", "10000"},
        {"train.patch_lr", "48"},
        {"train.augment", "true"},
        {"train.checkpoint_interval", "1000"},
        {"train.tau_start", "30"},
        {"train.tau_end", "1"},
        // 0 resolves to total_steps / 10.
        {"train.tau_anneal_steps", "0"},
        {"data.root", ""},
        {"data.train_split", "train"},
        {"data.eval_split", "val"},
        {"eval.channel", "y"},
        // "scale" resolves to the model scale factor.
        {"eval.border_crop", "scale"},
        {"seed", "0"},
    };
    return d;
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) {
      throw std::invalid_argument(detail::str_cat("unknown config key '", key, "'"));
    }
    values_[key] = value;
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
      throw std::runtime_error(detail::str_cat("cannot open config file ", path));
    }
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string stripped = strip(line.substr(0, line.find('#')));
      if (stripped.empty()) continue;
      std::size_t eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error(detail::str_cat(
            path, ":", lineno, ": expected key=value, got '", stripped, "'"));
      }
      set(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw std::invalid_argument(detail::str_cat("unknown config key '", key, "'"));
    }
    return it->second;
  }

  std::int64_t get_i64(const std::string& key) const {
    return parse_i64(key, get(key));
  }

  double get_f64(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    double out;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != v.size() || v.empty()) {
      throw std::invalid_argument(detail::str_cat(
          "config ", key, ": '", v, "' is not a number"));
    }
    return out;
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument(detail::str_cat(
        "config ", key, ": '", v, "' is not a boolean (true/false/1/0)"));
  }

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.scale = get_i64("model.scale");
    mc.variant = parse_variant(get("model.variant"));
    mc.k = get_i64("model.k");
    mc.fusion = parse_fusion(get("model.fusion"));
    mc.validate();
    return mc;
  }

  TrainConfig train_config() const {
    TrainConfig tc;
    tc.batch_size = get_i64("train.batch_size");
    tc.lr_initial = get_f64("train.lr_initial");
    tc.lr_halving_period = get_i64("train.lr_halving_period");
    tc.beta1 = get_f64("train.beta1");
    tc.beta2 = get_f64("train.beta2");
    tc.epsilon = get_f64("train.epsilon");
    tc.total_steps = get_i64("train.total_steps");
    tc.patch_lr = get_i64("train.patch_lr");
    tc.augment = get_bool("train.augment");
    tc.checkpoint_interval = get_i64("train.checkpoint_interval");
    tc.tau_start = get_f64("train.tau_start");
    tc.tau_end = get_f64("train.tau_end");
    tc.tau_anneal_steps = get_i64("train.tau_anneal_steps");
    tc.seed = static_cast<std::uint64_t>(get_i64("seed"));
    tc.validate();
    return tc;
  }

  EvalProtocol eval_protocol() const {
    EvalProtocol p;
    const std::string& channel = get("eval.channel");
    if (channel == "y") {
      p.channel = EvalProtocol::Channel::kY;
    } else if (channel == "rgb") {
      p.channel = EvalProtocol::Channel::kRGB;
    } else {
      throw std::invalid_argument(detail::str_cat(
          "config eval.channel: '", channel, "' is not y or rgb"));
    }
    const std::string& crop = get("eval.border_crop");
    p.border_crop = crop == "scale" ? get_i64("model.scale") : parse_i64("eval.border_crop", crop);
    if (p.border_crop < 0) {
      throw std::invalid_argument("config eval.border_crop: must be >= 0");
    }
    return p;
  }

  std::string echo() const {
    std::ostringstream os;
    for (const auto& [key, value] : values_) os << key << "=" << value << "\n";
    return os.str();
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static std::int64_t parse_i64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    std::int64_t out;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != v.size() || v.empty()) {
      throw std::invalid_argument(detail::str_cat(
          "config ", key, ": '", v, "' is not an integer"));
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace adsrnet
