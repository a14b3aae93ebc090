#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace xcb {

// Little-endian raw encodings. Doubles are written as their IEEE-754 bit
// pattern so round trips are bit-exact.

template <typename T>
void write_pod(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw_io("unexpected end of file");
  return v;
}

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
  write_pod<std::uint64_t>(os, v.size());
  if (!v.empty())
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::istream& is, std::uint64_t max_len = 1ULL << 32) {
  auto n = read_pod<std::uint64_t>(is);
  if (n > max_len) throw_io("corrupt file: implausible array length");
  std::vector<T> v(n);
  if (n) {
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw_io("unexpected end of file");
  }
  return v;
}

inline void write_magic(std::ostream& os, const char magic[4],
                        std::uint32_t version) {
  os.write(magic, 4);
  write_pod<std::uint32_t>(os, version);
}

inline std::uint32_t read_magic(std::istream& is, const char magic[4]) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw_io("bad file magic");
  return read_pod<std::uint32_t>(is);
}

}  // namespace xcb
