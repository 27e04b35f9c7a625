#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace ddrm::binio {

// Checkpoints are little-endian on disk regardless of host order.

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint truncated (u32)");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

inline void write_f32(std::ostream& out, float f) {
  std::uint32_t v;
  static_assert(sizeof(v) == sizeof(f));
  __builtin_memcpy(&v, &f, 4);
  write_u32(out, v);
}

inline float read_f32(std::istream& in) {
  const std::uint32_t v = read_u32(in);
  float f;
  __builtin_memcpy(&f, &v, 4);
  return f;
}

inline void expect_magic(std::istream& in, const char* magic,
                         const std::string& path) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::string(buf, 8) != magic) {
    throw std::runtime_error("bad magic in checkpoint " + path +
                             " (expected " + magic + ")");
  }
}

}  // namespace ddrm::binio
