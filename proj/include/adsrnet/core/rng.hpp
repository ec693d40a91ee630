#pragma once

#include <cmath>
#include <cstdint>

namespace adsrnet {

namespace detail {

// splitmix64: mixes a 64-bit value into a well-distributed 64-bit value.
// Used both to expand seeds into generator state and to derive per-step
// stream seeds, so that (seed, step) pairs give independent streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic PRNG with a platform-independent sequence.
/// PCG32 (XSH-RR) core with helpers for uniform, integer-range and normal
/// draws. The stream produced for a given seed is identical across
/// compilers and architectures, which keeps weight init and patch
/// sampling reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    state_ = 0;
    inc_ = (detail::splitmix64(seed ^ 0xda3e39cb94b95bdbULL) << 1u) | 1u;
    next_u32();
    state_ += detail::splitmix64(seed);
    next_u32();
    have_spare_ = false;
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0,1) with 32 bits of resolution.
  double uniform() { return next_u32() * 0x1p-32; }

  // Uniform integer in [0, bound) without modulo bias (rejection sampling).
  // bound must be positive.
  std::uint32_t uniform_int(std::uint32_t bound) {
    std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; caches the second variate of each pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double two_pi_u2 = 2.0 * 3.14159265358979323846 * u2;
    spare_ = mag * std::sin(two_pi_u2);
    have_spare_ = true;
    return mag * std::cos(two_pi_u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Derives the seed for one training step's sampling stream. Each step
/// draws from Rng(step_seed(seed, step)), so resuming at step t
/// reproduces the exact batches of an uninterrupted run without
/// serializing generator state.
constexpr std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  return detail::splitmix64(seed ^ detail::splitmix64(step + 0x517cc1b727220a95ULL));
}

}  // namespace adsrnet
