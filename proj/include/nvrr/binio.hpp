#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "nvrr/errors.hpp"

namespace nvrr {

// FNV-1a 64-bit, used to fingerprint configs and manifests.
inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xF];
  return s;
}

namespace binio {

// Little-endian scalar I/O, explicit so the on-disk formats are portable.
template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw io_error("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic,
                         const std::string& what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || got != magic) throw io_error("not a " + what + " file (bad magic)");
}

}  // namespace binio
}  // namespace nvrr
