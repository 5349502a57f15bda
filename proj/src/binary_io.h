#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "swirseg/error.h"

namespace swirseg::detail {

// Little-endian 32-bit helpers shared by the binary container formats.

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32_le(std::istream& is, const std::string& what) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("truncated " + what);
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  return v;
}

inline void write_f32_le(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) write_u32_le(os, std::bit_cast<std::uint32_t>(f));
  }
}

inline void read_f32_le(std::istream& is, std::span<float> out, const std::string& what) {
  if (!is.read(reinterpret_cast<char*>(out.data()),
               static_cast<std::streamsize>(out.size() * sizeof(float)))) {
    throw InputError("truncated " + what);
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : out) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
}

}  // namespace swirseg::detail
