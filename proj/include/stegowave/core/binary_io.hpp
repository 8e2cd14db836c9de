#pragma once

// Little-endian primitives shared by the checkpoint and tensor file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "stegowave/core/error.hpp"

namespace stegowave::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("unexpected end of binary stream");
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::size_t max_len = 1u << 26) {
  const auto n = read<std::uint32_t>(is);
  if (n > max_len) throw FormatError("string field too long in binary stream");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw FormatError("unexpected end of binary stream");
  return s;
}

inline void write_floats(std::ostream& os, std::span<const float> values) {
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size_bytes()));
}

inline void read_floats(std::istream& is, std::span<float> out) {
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(out.size_bytes()));
  if (!is) throw FormatError("unexpected end of binary stream");
}

}  // namespace stegowave::binary
