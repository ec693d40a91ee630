#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "adsrnet/data/bicubic.hpp"
#include "adsrnet/data/image.hpp"
#include "adsrnet/data/png_io.hpp"

namespace adsrnet {

/// One HR/LR pairing with its provenance.
struct ImagePair {
  Image8 hr;
  Image8 lr;
  std::int64_t scale = 0;
  std::string source;
};

// Sorted .png filenames (not full paths) in a directory. Lexicographic
// byte order, so the listing is identical on every platform.
inline std::vector<std::string> list_pngs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(detail::str_cat("not a directory: ", dir));
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.size() >= 4 && name.substr(name.size() - 4) == ".png") {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

/// Index over `<root>/<split>/HR/*.png` paired with
/// `<root>/<split>/LR_x{scale}/*.png` by identical filename. Files
/// present on only one side are kept in `unpaired` for warning output.
struct DatasetIndex {
  std::string split;
  std::int64_t scale = 0;
  std::string hr_dir;
  std::string lr_dir;
  std::vector<std::string> names;
  std::vector<std::string> unpaired;

  std::size_t size() const { return names.size(); }
};

inline DatasetIndex index_dataset(const std::string& root, const std::string& split,
                                  std::int64_t scale) {
  namespace fs = std::filesystem;
  DatasetIndex idx;
  idx.split = split;
  idx.scale = scale;
  idx.hr_dir = (fs::path(root) / split / "HR").string();
  idx.lr_dir = (fs::path(root) / split / detail::str_cat("LR_x", scale)).string();

  std::vector<std::string> hr_names = list_pngs(idx.hr_dir);
  std::vector<std::string> lr_names = list_pngs(idx.lr_dir);
  std::set_intersection(hr_names.begin(), hr_names.end(), lr_names.begin(),
                        lr_names.end(), std::back_inserter(idx.names));
  std::set_symmetric_difference(hr_names.begin(), hr_names.end(), lr_names.begin(),
                                lr_names.end(), std::back_inserter(idx.unpaired));
  return idx;
}

// Loads pair i, checking the dimension contract hr = scale * lr exactly.
inline ImagePair load_pair(const DatasetIndex& idx, std::size_t i) {
  namespace fs = std::filesystem;
  ImagePair pair;
  pair.scale = idx.scale;
  pair.source = idx.names[i];
  pair.hr = read_png((fs::path(idx.hr_dir) / idx.names[i]).string());
  pair.lr = read_png((fs::path(idx.lr_dir) / idx.names[i]).string());
  if (pair.hr.h != pair.lr.h * idx.scale || pair.hr.w != pair.lr.w * idx.scale) {
    throw std::runtime_error(detail::str_cat(
        "pair ", pair.source, ": HR ", pair.hr.w, "x", pair.hr.h,
        " is not exactly ", idx.scale, "x the LR ", pair.lr.w, "x", pair.lr.h));
  }
  return pair;
}

struct DegradeResult {
  std::int64_t written = 0;
  std::int64_t failed = 0;
};

/// Bicubic-downscales every PNG in hr_dir into out_dir under the same
/// filename. Unreadable or undersized images are skipped with a warning
/// on the error stream; the caller decides what overall failure means.
inline DegradeResult degrade_directory(const std::string& hr_dir, std::int64_t scale,
                                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names = list_pngs(hr_dir);
  fs::create_directories(out_dir);
  DegradeResult result;
  for (const std::string& name : names) {
    try {
      Image8 hr = read_png((fs::path(hr_dir) / name).string());
      Image8 lr = degrade_image(hr, scale);
      write_png((fs::path(out_dir) / name).string(), lr);
      ++result.written;
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << name << ": " << e.what() << "\n";
      ++result.failed;
    }
  }
  return result;
}

}  // namespace adsrnet
