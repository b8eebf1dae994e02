#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace aisc {

// Zeroes the low `k` mantissa bits of a binary64 value, keeping sign and
// exponent intact. Values with an all-ones exponent (inf, NaN) pass through
// unchanged. k must be in [0, 52].
inline double discard_mantissa_bits(double v, int k) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if ((bits & 0x7FF0000000000000ull) == 0x7FF0000000000000ull) return v;
  bits &= ~((std::uint64_t(1) << k) - 1);
  return std::bit_cast<double>(bits);
}

// Reciprocal with a mantissa correct to 12 bits: the exact IEEE reciprocal
// with the remaining 40 mantissa bits discarded.
inline double frcp12(double v) { return discard_mantissa_bits(1.0 / v, 40); }

// Rounds to the closest integer, halves away from zero.
inline double round_to_nearest_int(double v) {
  if (!std::isfinite(v)) return v;
  return std::round(v);
}

} // namespace aisc
