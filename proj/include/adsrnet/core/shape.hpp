#pragma once

#include <cstdint>
#include <sstream>
#include <string>

namespace adsrnet {

/// Dense 4-d extent in (batch, channel, height, width) order.
/// Every tensor in the library is exactly 4-d; vectors and scalars use
/// trailing unit extents, e.g. a bias of length C is (C,1,1,1) and a
/// scalar is (1,1,1,1).
struct Shape4 {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  constexpr Shape4() = default;
  constexpr Shape4(std::int64_t n_, std::int64_t c_, std::int64_t h_, std::int64_t w_)
      : n(n_), c(c_), h(h_), w(w_) {}

  constexpr std::int64_t numel() const { return n * c * h * w; }

  constexpr bool valid() const { return n > 0 && c > 0 && h > 0 && w > 0; }

  constexpr bool is_scalar() const { return numel() == 1; }

  // Flat offset of element (i,j,y,x); layout is row-major N,C,H,W.
  constexpr std::int64_t index(std::int64_t i, std::int64_t j, std::int64_t y,
                               std::int64_t x) const {
    return ((i * c + j) * h + y) * w + x;
  }

  friend constexpr bool operator==(const Shape4&, const Shape4&) = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
  }
};

namespace detail {

// Small concatenating formatter; gcc 11 has no std::format.
template <typename... Args>
std::string str_cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace detail

}  // namespace adsrnet
