#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aisc/bits.hpp"
#include "aisc/interp.hpp"
#include "aisc/isa.hpp"

namespace aisc {

enum class TechniqueKind : std::uint8_t {
  Native,
  DPtoSP,
  DPtoHP,
  SPtoHP,
  DPtoINT,
  SPtoINT,
  DropDIV,
  RandomStaticDrop,
  MULtoADD,
  DIVtoMUL12,
  DIVtoMUL_NR,
};

inline constexpr std::uint64_t kDefaultAddCap = 4096;

struct Technique {
  TechniqueKind kind = TechniqueKind::Native;
  double threshold = 0.0;             // RandomStaticDrop only
  std::optional<std::uint64_t> seed;  // RandomStaticDrop only
  std::uint64_t add_cap = kDefaultAddCap;  // MULtoADD only

  bool operator==(const Technique&) const = default;
};

// Parses a technique from its CLI form: native, dptosp, dptohp, sptohp,
// dptoint, sptoint, dropdiv, drop:t=<f>[,seed=<u64>], multoadd[:cap=<n>],
// divtomul12, divtomulnr. Throws std::invalid_argument on bad input.
Technique parse_technique(std::string_view s);

// Canonical CLI form; parse_technique(technique_to_string(t)) == t.
std::string technique_to_string(const Technique& t);

struct TransformOutcome {
  Program program;
  ExecHooks hooks;
  std::vector<std::uint32_t> dropped_static;
  std::string notes;
};

// Result of expanding one multiply into repeated addition.
struct MulToAddResult {
  double result = 0.0;
  std::uint64_t adds = 0;
  bool cap_exceeded = false;
};

// Multiplier m = round_to_nearest_int(min(|a|, |b|)); the other factor is
// summed m times via m-1 additions and the sign corrected afterwards.
// m = 0 yields +0.0 with no additions. m > cap falls back to the exact
// product and sets cap_exceeded. Non-finite factors multiply exactly.
MulToAddResult expand_mul_to_add(double a, double b, std::uint64_t cap);

// Reciprocal-based division. DIVtoMUL12: dividend * frcp12(divisor).
// DIVtoMUL_NR refines the seed with one Newton-Raphson step first:
//   x0 = frcp12(d); t1 = d*x0; t2 = t1*x0; t3 = x0+x0; x1 = t3-t2;
//   result = dividend * x1.
// A zero divisor falls back to IEEE division. extra holds the substitute
// instruction count at the category for `width` (2 for 12, 6 for NR).
EmulResult div_to_mul(double dividend, double divisor, TechniqueKind variant,
                      Width width);

ExecHooks make_breadth_hooks(TechniqueKind variant);
TransformOutcome drop_div(const Program& p);
TransformOutcome random_static_drop(const Program& p, double t, std::uint64_t seed);

// Dispatches a parsed technique. RandomStaticDrop requires a resolved seed.
TransformOutcome make_technique(const Program& p, const Technique& tech);

// Maps every unsupported instruction per the profile policy. Unsupported
// Critical or Integer instructions cannot be lowered under any policy.
TransformOutcome lower_for_engine(const Program& p, const EngineProfile& e);

} // namespace aisc
