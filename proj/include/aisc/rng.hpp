#pragma once

#include <cstdint>
#include <string_view>

namespace aisc {

// Deterministic 64-bit stream generator (splitmix64). Every random draw in
// the workbench comes from this generator, so a fixed seed reproduces a run
// bit-for-bit on any platform and in any reimplementation.
//
// State update per draw:
//   s += 0x9E3779B97F4A7C15
//   z = s; z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
//   z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): the top 53 bits of the stream scaled by 2^-53.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

private:
  std::uint64_t state_;
};

// FNV-1a over bytes; used to fold names into seed material.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Derives an independent stream seed from a base seed and a name.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  SplitMix64 g(base ^ fnv1a(name));
  return g.next_u64();
}

} // namespace aisc
