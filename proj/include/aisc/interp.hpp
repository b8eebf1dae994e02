#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aisc/isa.hpp"

namespace aisc {

struct MachineState {
  std::uint32_t pc = 0;
  std::array<std::int64_t, 32> iregs{};  // r0 reads as zero, writes discarded
  std::array<double, 32> fregs{};
  std::vector<std::uint64_t> memory;
  bool halted = false;
};

struct RunStats {
  std::array<std::uint64_t, kCategoryCount> dynamic_counts{};
  std::array<std::uint64_t, kCategoryCount> emulation_extra{};
  std::uint64_t dropped_dynamic = 0;
  std::uint64_t cap_exceeded = 0;   // dynamic emulations that fell back on a cap
  std::uint64_t total_dynamic = 0;  // sum of dynamic_counts and emulation_extra
  // Executed opcode histogram by (opcode, width); dropped and emulated
  // instances are not executed and do not appear here.
  std::array<std::array<std::uint64_t, kWidthCount>, kOpcodeCount> opcode_counts{};
};

enum class RunStatus : std::uint8_t { Halted, BudgetExceeded, Trap };

struct RunResult {
  RunStatus status = RunStatus::Halted;
  std::string trap_reason;  // set iff status == Trap
  RunStats stats;
  MachineState final_state;
};

// Result of emulating one dynamic FP instruction.
struct EmulResult {
  double value = 0.0;
  std::array<std::uint64_t, kCategoryCount> extra{};  // substitute instructions
  bool cap_exceeded = false;
};

// Approximation hooks. The interpreter consults them only for FP-kind
// instructions that do not classify as Critical; Critical and Integer
// instructions never reach any hook. operand_map and reclassify apply to
// fp-alu and fp-mem only; op_emulator and should_drop also cover fp-cvt
// (engine lowering needs them there), where the emulated value is the
// conversion operand. When chained, the order is: map source operands,
// emulate, map the result.
struct ExecHooks {
  std::function<double(Width, double)> operand_map;
  std::function<bool(std::uint32_t)> should_drop;
  std::function<std::optional<EmulResult>(Opcode, Width, double, double)> op_emulator;
  std::function<Category(Category)> reclassify;  // energy accounting only

  bool empty() const { return !operand_map && !should_drop && !op_emulator && !reclassify; }
};

// Executes one dynamic instruction (or skips it when dropped) and advances pc.
// Returns a trap reason on error, nothing otherwise.
std::optional<std::string> step(const Program& prog, MachineState& state,
                                const ExecHooks& hooks, RunStats& stats);

// Runs from the entry point until HALT, trap, or budget exhaustion.
RunResult run(const Program& prog, const std::vector<std::uint64_t>& image,
              const ExecHooks& hooks, std::uint64_t budget);

// Reads `len` binary64 words starting at word `base`. Throws on out-of-range.
std::vector<double> read_output(const MachineState& state, std::uint64_t base,
                                std::uint64_t len);

} // namespace aisc
