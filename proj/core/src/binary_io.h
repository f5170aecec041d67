#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "rgbdfuse/error.h"

// Little-endian scalar helpers shared by the binary container formats.
namespace rgbdfuse::binio {

template <typename T>
void WriteLe(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(u & 0xffu);
    u = static_cast<U>(u >> 8);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

inline void WriteF32(std::ostream& os, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  WriteLe(os, bits);
}

template <typename T>
T ReadLe(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(ErrorCode::kFormat, "unexpected end of file");
  }
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | buf[i]);
  return static_cast<T>(u);
}

inline float ReadF32(std::istream& is) {
  const auto bits = ReadLe<std::uint32_t>(is);
  float value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

}  // namespace rgbdfuse::binio
