#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "adsrnet/core/shape.hpp"

namespace adsrnet {

/// Ablation variants. full is the complete two-branch network; every
/// other value removes or substitutes one structural ingredient:
///   six_cru_cb         six stacked CRUs + CB (no blocks, no lower branch)
///   hb_plain           blocks hold only the plain CRU (+ residual)
///   hb_no_dynamic      blocks hold dilated + plain CRUs
///   hb_no_dilated      blocks hold dynamic + plain CRUs
///   hb_cru_for_dilated plain CRU substituted into the dilated slot
///   hb_cru_for_dynamic plain CRU substituted into the dynamic slot
///   hunet_only         full upper branch + CB, lower branch dropped
///   no_sl_residual     full network, lower-branch skip additions removed
/// The hb_* variants and hunet_only run the upper branch + CB only.
enum class Variant {
  kFull,
  kSixCruCb,
  kHbPlain,
  kHbNoDynamic,
  kHbNoDilated,
  kHbCruForDilated,
  kHbCruForDynamic,
  kHunetOnly,
  kNoSlResidual,
};

enum class Fusion { kMultiply, kConcat };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kSixCruCb: return "six_cru_cb";
    case Variant::kHbPlain: return "hb_plain";
    case Variant::kHbNoDynamic: return "hb_no_dynamic";
    case Variant::kHbNoDilated: return "hb_no_dilated";
    case Variant::kHbCruForDilated: return "hb_cru_for_dilated";
    case Variant::kHbCruForDynamic: return "hb_cru_for_dynamic";
    case Variant::kHunetOnly: return "hunet_only";
    case Variant::kNoSlResidual: return "no_sl_residual";
  }
  throw std::logic_error("variant_name: unhandled variant");
}

inline const std::array<Variant, 9>& all_variants() {
  static const std::array<Variant, 9> v = {
      Variant::kFull,           Variant::kSixCruCb,
      Variant::kHbPlain,        Variant::kHbNoDynamic,
      Variant::kHbNoDilated,    Variant::kHbCruForDilated,
      Variant::kHbCruForDynamic, Variant::kHunetOnly,
      Variant::kNoSlResidual,
  };
  return v;
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : all_variants()) {
    if (s == variant_name(v)) return v;
  }
  throw std::invalid_argument(detail::str_cat("unknown variant '", s, "'"));
}

inline const char* fusion_name(Fusion f) {
  return f == Fusion::kMultiply ? "multiply" : "concat";
}

inline Fusion parse_fusion(const std::string& s) {
  if (s == "multiply") return Fusion::kMultiply;
  if (s == "concat") return Fusion::kConcat;
  throw std::invalid_argument(detail::str_cat("unknown fusion mode '", s, "'"));
}

/// Complete architectural description; enough to rebuild an identical
/// network, so its fingerprint guards checkpoints against being loaded
/// into a mismatched graph. channels and hb_count are structural
/// constants of the architecture and are fixed.
struct ModelConfig {
  std::int64_t scale = 2;
  Variant variant = Variant::kFull;
  std::int64_t k = 4;
  Fusion fusion = Fusion::kMultiply;
  std::int64_t channels = 64;
  std::int64_t hb_count = 5;

  void validate() const {
    if (scale != 2 && scale != 3 && scale != 4) {
      throw std::invalid_argument(detail::str_cat(
          "ModelConfig: scale must be 2, 3 or 4, got ", scale));
    }
    if (k < 1) {
      throw std::invalid_argument(detail::str_cat(
          "ModelConfig: k must be >= 1, got ", k));
    }
    if (channels != 64) {
      throw std::invalid_argument("ModelConfig: channels is fixed at 64");
    }
    if (hb_count != 5) {
      throw std::invalid_argument("ModelConfig: hb_count is fixed at 5");
    }
  }

  // Canonical text form: key=value lines sorted by key. This exact byte
  // sequence is hashed into checkpoints, so it must never be reordered.
  std::string canonical_text() const {
    return detail::str_cat(
        "model.channels=", channels, "\n",
        "model.fusion=", fusion_name(fusion), "\n",
        "model.hb_count=", hb_count, "\n",
        "model.k=", k, "\n",
        "model.scale=", scale, "\n",
        "model.variant=", variant_name(variant), "\n");
  }

  std::uint64_t fingerprint() const {
    // FNV-1a, 64-bit.
    std::uint64_t h = 14695981039346656037ULL;
    for (char ch : canonical_text()) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    return h;
  }

  bool has_slnet() const {
    return variant == Variant::kFull || variant == Variant::kNoSlResidual;
  }

  bool slnet_residuals() const { return variant == Variant::kFull; }

  // Channel count entering the construction block.
  std::int64_t fused_channels() const {
    if (has_slnet() && fusion == Fusion::kConcat) return 2 * channels;
    return channels;
  }
};

}  // namespace adsrnet
