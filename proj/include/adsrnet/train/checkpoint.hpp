#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "adsrnet/model/config.hpp"
#include "adsrnet/model/parameters.hpp"
#include "adsrnet/train/adam.hpp"

namespace adsrnet {

namespace detail {

// All multi-byte values are little-endian on disk regardless of host.
inline void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float get_f32(std::istream& is) {
  std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void put_entry(std::ostream& os, const std::string& name, const Shape4& shape,
                      const float* values, std::int64_t count) {
  put_u16(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(shape.n));
  put_u32(os, static_cast<std::uint32_t>(shape.c));
  put_u32(os, static_cast<std::uint32_t>(shape.h));
  put_u32(os, static_cast<std::uint32_t>(shape.w));
  for (std::int64_t i = 0; i < count; ++i) put_f32(os, values[i]);
}

struct EntryHeader {
  std::string name;
  Shape4 shape;
};

inline EntryHeader get_entry_header(std::istream& is) {
  EntryHeader h;
  std::uint16_t len = get_u16(is);
  h.name.resize(len);
  is.read(h.name.data(), len);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  h.shape.n = get_u32(is);
  h.shape.c = get_u32(is);
  h.shape.h = get_u32(is);
  h.shape.w = get_u32(is);
  return h;
}

}  // namespace detail

constexpr char kCheckpointMagic[4] = {'A', 'D', 'S', 'R'};
constexpr std::uint16_t kCheckpointVersion = 1;

/// Serializes parameters (and optionally Adam state) to the checkpoint
/// format: magic "ADSR", version u16, config fingerprint u64, parameter
/// count u32, then per parameter a name (u16 length + UTF-8), four u32
/// dims, and raw little-endian f32 values. A training checkpoint appends
/// an optimizer section under the same entry conventions: u32 entry
/// count, then adam.step plus adam.m.* / adam.v.* per parameter. An
/// inference checkpoint ends after the parameters.
template <typename T>
void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ParameterSet<T>& params, Adam<T>* opt = nullptr) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(detail::str_cat("cannot write checkpoint ", path));

  os.write(kCheckpointMagic, 4);
  detail::put_u16(os, kCheckpointVersion);
  detail::put_u64(os, config.fingerprint());
  detail::put_u32(os, static_cast<std::uint32_t>(params.size()));

  std::vector<float> scratch;
  auto write_values = [&](const std::string& name, const Shape4& shape, const T* v,
                          std::int64_t count) {
    scratch.resize(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      scratch[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
    }
    detail::put_entry(os, name, shape, scratch.data(), count);
  };

  for (const auto& entry : params.entries()) {
    write_values(entry.name, entry.tensor.shape(), entry.tensor.data(),
                 entry.tensor.numel());
  }

  if (opt) {
    opt->ensure_state(params);
    detail::put_u32(os, static_cast<std::uint32_t>(1 + 2 * params.size()));
    float step_value = static_cast<float>(opt->step_count());
    detail::put_entry(os, "adam.step", Shape4(1, 1, 1, 1), &step_value, 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = params.entries()[i];
      write_values("adam.m." + entry.name, entry.tensor.shape(),
                   opt->m_buffers()[i].data(), entry.tensor.numel());
      write_values("adam.v." + entry.name, entry.tensor.shape(),
                   opt->v_buffers()[i].data(), entry.tensor.numel());
    }
  }
  if (!os) throw std::runtime_error(detail::str_cat("failed writing checkpoint ", path));
}

/// Restores parameters in place. The file's magic, version, fingerprint,
/// entry names and shapes must all match the given config and parameter
/// set; the first mismatch is rejected by name. When opt is non-null the
/// optimizer section is required and restored too; when it is null a
/// trailing optimizer section is ignored.
template <typename T>
void load_checkpoint(const std::string& path, const ModelConfig& config,
                     ParameterSet<T>& params, Adam<T>* opt = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(detail::str_cat("cannot open checkpoint ", path));

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::runtime_error(detail::str_cat(path, ": not a checkpoint (bad magic)"));
  }
  std::uint16_t version = detail::get_u16(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(detail::str_cat(
        path, ": unsupported checkpoint version ", version));
  }
  std::uint64_t fp = detail::get_u64(is);
  if (fp != config.fingerprint()) {
    throw std::runtime_error(detail::str_cat(
        path, ": config fingerprint mismatch (checkpoint was written for a "
        "different model configuration)"));
  }
  std::uint32_t count = detail::get_u32(is);
  if (count != params.size()) {
    throw std::runtime_error(detail::str_cat(
        path, ": checkpoint has ", count, " parameters, model expects ",
        params.size()));
  }

  auto read_values = [&](const detail::EntryHeader& header, const std::string& expect,
                         const Shape4& shape, T* out) {
    if (header.name != expect) {
      throw std::runtime_error(detail::str_cat(
          path, ": expected parameter '", expect, "', found '", header.name, "'"));
    }
    if (!(header.shape == shape)) {
      throw std::runtime_error(detail::str_cat(
          path, ": parameter '", expect, "' has shape ", header.shape.str(),
          ", model expects ", shape.str()));
    }
    for (std::int64_t i = 0; i < shape.numel(); ++i) {
      out[i] = static_cast<T>(detail::get_f32(is));
    }
  };

  for (auto& entry : params.entries()) {
    read_values(detail::get_entry_header(is), entry.name, entry.tensor.shape(),
                entry.tensor.data());
  }

  if (opt) {
    std::uint32_t opt_count = 0;
    try {
      opt_count = detail::get_u32(is);
    } catch (const std::exception&) {
      throw std::runtime_error(detail::str_cat(
          path, ": checkpoint has no optimizer state; cannot resume"));
    }
    if (opt_count != 1 + 2 * params.size()) {
      throw std::runtime_error(detail::str_cat(
          path, ": unexpected optimizer entry count ", opt_count));
    }
    opt->ensure_state(params);
    detail::EntryHeader step_header = detail::get_entry_header(is);
    if (step_header.name != "adam.step") {
      throw std::runtime_error(detail::str_cat(
          path, ": expected 'adam.step', found '", step_header.name, "'"));
    }
    opt->set_step_count(static_cast<std::int64_t>(detail::get_f32(is)));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = params.entries()[i];
      read_values(detail::get_entry_header(is), "adam.m." + entry.name,
                  entry.tensor.shape(), opt->m_buffers()[i].data());
      read_values(detail::get_entry_header(is), "adam.v." + entry.name,
                  entry.tensor.shape(), opt->v_buffers()[i].data());
    }
  }
}

}  // namespace adsrnet
