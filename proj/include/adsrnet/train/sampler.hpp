#pragma once

#include <cstdint>

#include "adsrnet/core/rng.hpp"
#include "adsrnet/data/dataset.hpp"
#include "adsrnet/data/image.hpp"

namespace adsrnet {

inline Image8 crop_image(const Image8& img, std::int64_t y0, std::int64_t x0,
                         std::int64_t h, std::int64_t w) {
  Image8 out(h, w);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    }
  }
  return out;
}

inline Image8 hflip(const Image8& img) {
  Image8 out(img.h, img.w);
  for (std::int64_t y = 0; y < img.h; ++y) {
    for (std::int64_t x = 0; x < img.w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
    }
  }
  return out;
}

inline Image8 vflip(const Image8& img) {
  Image8 out(img.h, img.w);
  for (std::int64_t y = 0; y < img.h; ++y) {
    for (std::int64_t x = 0; x < img.w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(img.h - 1 - y, x, c);
    }
  }
  return out;
}

// Quarter turn counterclockwise; square inputs only (patches are square).
inline Image8 rot90(const Image8& img) {
  Image8 out(img.w, img.h);
  for (std::int64_t y = 0; y < out.h; ++y) {
    for (std::int64_t x = 0; x < out.w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(x, img.w - 1 - y, c);
    }
  }
  return out;
}

struct PatchPair {
  Image8 lr;
  Image8 hr;
};

/// Uniformly random aligned crop from a pair: LR offset (ox, oy) drawn
/// over all valid positions, HR offset exactly scale times that. With
/// augmentation on, horizontal flip, vertical flip and a 90-degree
/// rotation are each applied with probability 1/2, identically to both
/// patches. Draw order (ox, oy, flips, rotation) is part of the
/// determinism contract.
inline PatchPair sample_patch(const ImagePair& pair, std::int64_t patch_lr, Rng& rng,
                              bool augment) {
  std::int64_t s = pair.scale;
  if (pair.lr.h < patch_lr || pair.lr.w < patch_lr) {
    throw std::invalid_argument(detail::str_cat(
        "sample_patch: LR image ", pair.lr.w, "x", pair.lr.h,
        " smaller than patch size ", patch_lr));
  }
  if (pair.hr.h != pair.lr.h * s || pair.hr.w != pair.lr.w * s) {
    throw std::invalid_argument("sample_patch: HR dims are not scale * LR dims");
  }

  std::int64_t ox = rng.uniform_int(static_cast<std::uint32_t>(pair.lr.w - patch_lr + 1));
  std::int64_t oy = rng.uniform_int(static_cast<std::uint32_t>(pair.lr.h - patch_lr + 1));

  PatchPair out;
  out.lr = crop_image(pair.lr, oy, ox, patch_lr, patch_lr);
  out.hr = crop_image(pair.hr, oy * s, ox * s, patch_lr * s, patch_lr * s);

  if (augment) {
    if (rng.bernoulli(0.5)) {
      out.lr = hflip(out.lr);
      out.hr = hflip(out.hr);
    }
    if (rng.bernoulli(0.5)) {
      out.lr = vflip(out.lr);
      out.hr = vflip(out.hr);
    }
    if (rng.bernoulli(0.5)) {
      out.lr = rot90(out.lr);
      out.hr = rot90(out.hr);
    }
  }
  return out;
}

/// Assembles one training batch as network-domain tensors: LR
/// (B,3,p,p) and HR (B,3,p*s,p*s) in [0,1]. Image choice and patch
/// draws consume rng in a fixed order.
template <typename T>
void sample_batch(const std::vector<ImagePair>& images, std::int64_t batch_size,
                  std::int64_t patch_lr, Rng& rng, bool augment, TensorT<T>& lr_out,
                  TensorT<T>& hr_out) {
  if (images.empty()) throw std::invalid_argument("sample_batch: no images");
  std::int64_t s = images[0].scale;
  lr_out = TensorT<T>(Shape4(batch_size, 3, patch_lr, patch_lr));
  hr_out = TensorT<T>(Shape4(batch_size, 3, patch_lr * s, patch_lr * s));
  for (std::int64_t b = 0; b < batch_size; ++b) {
    std::size_t pick = rng.uniform_int(static_cast<std::uint32_t>(images.size()));
    PatchPair patch = sample_patch(images[pick], patch_lr, rng, augment);
    for (std::int64_t c = 0; c < 3; ++c) {
      for (std::int64_t y = 0; y < patch_lr; ++y) {
        for (std::int64_t x = 0; x < patch_lr; ++x) {
          lr_out.at(b, c, y, x) = static_cast<T>(patch.lr.at(y, x, c)) / T(255);
        }
      }
      for (std::int64_t y = 0; y < patch_lr * s; ++y) {
        for (std::int64_t x = 0; x < patch_lr * s; ++x) {
          hr_out.at(b, c, y, x) = static_cast<T>(patch.hr.at(y, x, c)) / T(255);
        }
      }
    }
  }
}

}  // namespace adsrnet
