#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ddrm {

// Seedable generator used for every stochastic draw in the artifact.
//
// Core generator: SplitMix64 (Steele et al.) — a Weyl sequence with a
// 64-bit mixing finalizer. Pure integer arithmetic, so the raw stream is
// identical on every platform for a fixed seed.
//
// Standard normals use the Box-Muller transform; each draw consumes
// exactly two 64-bit outputs (no cached spare, so the consumption
// pattern is position-independent).
//
// Bounded integers use the 128-bit multiply reduction
// (x * n) >> 64, whose bias of at most n / 2^64 is negligible here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in {0, 1, ..., n-1}. n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // One standard-normal draw via Box-Muller.
  double next_normal() {
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::vector<double> normal_vector(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = next_normal();
    return v;
  }

 private:
  std::uint64_t state_;
};

// FNV-1a 64-bit hash, used for role tags and config fingerprints.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// All randomness flows from one top-level seed. Sub-streams are derived
// as mix64(seed XOR fnv1a64(role)) where mix64 is the SplitMix64
// finalizer, so independent pipeline stages never share a stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) {
  std::uint64_t z = seed ^ fnv1a64(role);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng derive_rng(std::uint64_t seed, std::string_view role) {
  return Rng(derive_seed(seed, role));
}

}  // namespace ddrm
