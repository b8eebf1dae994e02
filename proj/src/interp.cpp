#include "aisc/interp.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "aisc/bits.hpp"

namespace aisc {

namespace {

inline std::int64_t ireg(const MachineState& s, std::uint8_t n) {
  return n == 0 ? 0 : s.iregs[n];
}

inline void set_ireg(MachineState& s, std::uint8_t n, std::int64_t v) {
  if (n != 0) s.iregs[n] = v;
}

// Wrapping signed arithmetic without UB.
inline std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return std::int64_t(std::uint64_t(a) + std::uint64_t(b));
}
inline std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return std::int64_t(std::uint64_t(a) - std::uint64_t(b));
}
inline std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return std::int64_t(std::uint64_t(a) * std::uint64_t(b));
}

inline std::int64_t saturate_to_i64(double v) {
  if (std::isnan(v)) return 0;
  if (v >= 9223372036854775808.0) return std::numeric_limits<std::int64_t>::max();
  if (v <= -9223372036854775808.0) return std::numeric_limits<std::int64_t>::min();
  return std::int64_t(v);
}

} // namespace

std::optional<std::string> step(const Program& prog, MachineState& state,
                                const ExecHooks& hooks, RunStats& stats) {
  const Instruction& ins = prog.instructions[state.pc];
  const OpKind kind = opcode_kind(ins.op);
  const Category cat = classify(ins);
  const bool hookable = cat != Category::Critical && cat != Category::Integer;
  const bool mappable = hookable && (kind == OpKind::FpAlu || kind == OpKind::FpMem);

  if (hookable && hooks.should_drop && hooks.should_drop(ins.static_id)) {
    ++stats.dropped_dynamic;
    ++state.pc;
    return std::nullopt;
  }

  auto map = [&](double v) { return hooks.operand_map ? hooks.operand_map(ins.width, v) : v; };

  auto count_executed = [&] {
    Category eff = cat;
    if (mappable && hooks.reclassify) eff = hooks.reclassify(cat);
    ++stats.dynamic_counts[int(eff)];
    ++stats.total_dynamic;
    ++stats.opcode_counts[int(ins.op)][int(ins.width)];
  };

  auto count_emulated = [&](const EmulResult& em) {
    for (int c = 0; c < kCategoryCount; ++c) {
      stats.emulation_extra[c] += em.extra[c];
      stats.total_dynamic += em.extra[c];
    }
    if (em.cap_exceeded) ++stats.cap_exceeded;
  };

  auto mem_check = [&](std::int64_t addr) -> bool {
    return addr >= 0 && std::uint64_t(addr) < state.memory.size();
  };

  // FP ALU result path shared by the three-operand and two-operand forms.
  auto finish_fp_alu = [&](double a, double b, double native) {
    if (mappable && hooks.op_emulator) {
      if (auto em = hooks.op_emulator(ins.op, ins.width, a, b)) {
        state.fregs[ins.dst] = map(em->value);
        count_emulated(*em);
        ++state.pc;
        return true;
      }
    }
    state.fregs[ins.dst] = map(native);
    count_executed();
    ++state.pc;
    return false;
  };

  switch (ins.op) {
    case Opcode::HALT:
      state.halted = true;
      count_executed();
      ++state.pc;
      return std::nullopt;

    case Opcode::BR:
      count_executed();
      state.pc = ins.target_index;
      return std::nullopt;

    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLT:
    case Opcode::BGE: {
      std::int64_t a = ireg(state, ins.src1), b = ireg(state, ins.src2);
      bool taken = false;
      switch (ins.op) {
        case Opcode::BEQ: taken = a == b; break;
        case Opcode::BNE: taken = a != b; break;
        case Opcode::BLT: taken = a < b; break;
        default: taken = a >= b; break;
      }
      count_executed();
      state.pc = taken ? ins.target_index : state.pc + 1;
      return std::nullopt;
    }

    case Opcode::FBLT:
    case Opcode::FBGE: {
      // Branches are Critical: exact comparison on stored binary64 values.
      double a = state.fregs[ins.src1], b = state.fregs[ins.src2];
      bool taken = ins.op == Opcode::FBLT ? a < b : a >= b;
      count_executed();
      state.pc = taken ? ins.target_index : state.pc + 1;
      return std::nullopt;
    }

    case Opcode::IADD:
    case Opcode::ISUB:
    case Opcode::IMUL:
    case Opcode::IDIV:
    case Opcode::IAND:
    case Opcode::IOR:
    case Opcode::IXOR:
    case Opcode::ISHL:
    case Opcode::ISHR: {
      std::int64_t a = ireg(state, ins.src1);
      std::int64_t b = ins.has_imm ? ins.imm : ireg(state, ins.src2);
      std::int64_t r = 0;
      switch (ins.op) {
        case Opcode::IADD: r = wrap_add(a, b); break;
        case Opcode::ISUB: r = wrap_sub(a, b); break;
        case Opcode::IMUL: r = wrap_mul(a, b); break;
        case Opcode::IDIV:
          if (b == 0) return "integer divide by zero";
          if (a == std::numeric_limits<std::int64_t>::min() && b == -1)
            r = a;  // wraps, mirrors two's-complement hardware
          else
            r = a / b;
          break;
        case Opcode::IAND: r = a & b; break;
        case Opcode::IOR: r = a | b; break;
        case Opcode::IXOR: r = a ^ b; break;
        case Opcode::ISHL: r = std::int64_t(std::uint64_t(a) << (std::uint64_t(b) & 63)); break;
        default: r = a >> (std::uint64_t(b) & 63); break;
      }
      set_ireg(state, ins.dst, r);
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::ILD: {
      std::int64_t addr = wrap_add(ireg(state, ins.src1), ins.imm);
      if (!mem_check(addr)) return "memory access out of bounds";
      set_ireg(state, ins.dst, std::int64_t(state.memory[std::uint64_t(addr)]));
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::IST: {
      std::int64_t addr = wrap_add(ireg(state, ins.src1), ins.imm);
      if (!mem_check(addr)) return "memory access out of bounds";
      state.memory[std::uint64_t(addr)] = std::uint64_t(ireg(state, ins.dst));
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::FADD:
    case Opcode::FSUB:
    case Opcode::FMUL:
    case Opcode::FDIV: {
      double a = state.fregs[ins.src1], b = state.fregs[ins.src2];
      if (mappable) {
        a = map(a);
        b = map(b);
      }
      double r = 0.0;
      switch (ins.op) {
        case Opcode::FADD: r = a + b; break;
        case Opcode::FSUB: r = a - b; break;
        case Opcode::FMUL: r = a * b; break;
        default: r = a / b; break;  // IEEE: /0 gives +-inf, no trap
      }
      finish_fp_alu(a, b, r);
      return std::nullopt;
    }

    case Opcode::FMOV:
    case Opcode::FRCP: {
      double a = state.fregs[ins.src1];
      if (mappable) a = map(a);
      double r = ins.op == Opcode::FMOV ? a : frcp12(a);
      finish_fp_alu(a, 0.0, r);
      return std::nullopt;
    }

    case Opcode::FLD: {
      std::int64_t addr = ireg(state, ins.src1);
      if (!mem_check(addr)) return "memory access out of bounds";
      double v = std::bit_cast<double>(state.memory[std::uint64_t(addr)]);
      if (mappable && hooks.op_emulator) {
        if (auto em = hooks.op_emulator(ins.op, ins.width, v, 0.0)) {
          state.fregs[ins.dst] = map(em->value);
          count_emulated(*em);
          ++state.pc;
          return std::nullopt;
        }
      }
      state.fregs[ins.dst] = mappable ? map(v) : v;
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::FST: {
      std::int64_t addr = ireg(state, ins.src1);
      if (!mem_check(addr)) return "memory access out of bounds";
      double v = state.fregs[ins.dst];
      if (mappable) v = map(v);
      if (mappable && hooks.op_emulator) {
        if (auto em = hooks.op_emulator(ins.op, ins.width, v, 0.0)) {
          state.memory[std::uint64_t(addr)] = std::bit_cast<std::uint64_t>(em->value);
          count_emulated(*em);
          ++state.pc;
          return std::nullopt;
        }
      }
      state.memory[std::uint64_t(addr)] = std::bit_cast<std::uint64_t>(v);
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::ITOF: {
      // Conversions never see operand_map; lowering may emulate them.
      double v = double(ireg(state, ins.src1));
      if (hookable && hooks.op_emulator) {
        if (auto em = hooks.op_emulator(ins.op, ins.width, v, 0.0)) {
          state.fregs[ins.dst] = em->value;
          count_emulated(*em);
          ++state.pc;
          return std::nullopt;
        }
      }
      state.fregs[ins.dst] = v;
      count_executed();
      ++state.pc;
      return std::nullopt;
    }

    case Opcode::FTOI: {
      double v = state.fregs[ins.src1];
      if (hookable && hooks.op_emulator) {
        if (auto em = hooks.op_emulator(ins.op, ins.width, v, 0.0)) {
          set_ireg(state, ins.dst, saturate_to_i64(em->value));
          count_emulated(*em);
          ++state.pc;
          return std::nullopt;
        }
      }
      set_ireg(state, ins.dst, saturate_to_i64(v));
      count_executed();
      ++state.pc;
      return std::nullopt;
    }
  }
  return "unreachable opcode";
}

RunResult run(const Program& prog, const std::vector<std::uint64_t>& image,
              const ExecHooks& hooks, std::uint64_t budget) {
  RunResult res;
  res.final_state.memory = image;
  res.final_state.pc = prog.entry;
  res.final_state.iregs[31] = std::int64_t(prog.memory_words());  // stack top

  MachineState& st = res.final_state;
  while (!st.halted && res.stats.total_dynamic < budget) {
    if (st.pc >= prog.instructions.size()) {
      res.status = RunStatus::Trap;
      res.trap_reason = "fell off program end";
      return res;
    }
    if (auto trap = step(prog, st, hooks, res.stats)) {
      res.status = RunStatus::Trap;
      res.trap_reason = *trap;
      return res;
    }
  }
  res.status = st.halted ? RunStatus::Halted : RunStatus::BudgetExceeded;
  return res;
}

std::vector<double> read_output(const MachineState& state, std::uint64_t base,
                                std::uint64_t len) {
  if (base + len > state.memory.size() || base + len < base)
    throw std::out_of_range("output region outside memory image");
  std::vector<double> out(len);
  for (std::uint64_t i = 0; i < len; ++i)
    out[i] = std::bit_cast<double>(state.memory[base + i]);
  return out;
}

} // namespace aisc
