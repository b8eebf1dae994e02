#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aisc {

enum class Opcode : std::uint8_t {
  // control
  HALT, BR, BEQ, BNE, BLT, BGE, FBLT, FBGE,
  // integer alu
  IADD, ISUB, IMUL, IDIV, IAND, IOR, IXOR, ISHL, ISHR,
  // integer memory
  ILD, IST,
  // fp alu
  FADD, FSUB, FMUL, FDIV, FMOV, FRCP,
  // fp memory
  FLD, FST,
  // conversion
  ITOF, FTOI,
};

inline constexpr int kOpcodeCount = 29;

// Width is a static precision-class tag on FP instructions. Register and
// memory payloads are always binary64; narrower widths only affect how the
// instruction is categorised and which transforms may touch it.
enum class Width : std::uint8_t { None = 0, W64, W32, W16 };

inline constexpr int kWidthCount = 4;

enum class OpKind : std::uint8_t { Control, IntAlu, IntMem, FpAlu, FpMem, FpCvt };

// Energy accounting categories.
enum class Category : std::uint8_t { Critical = 0, Integer, FP64, FP32, FP16 };

inline constexpr int kCategoryCount = 5;

const char* category_name(Category c);
const char* opcode_name(Opcode op);
OpKind opcode_kind(Opcode op);
bool is_fp_kind(OpKind k);

struct Instruction {
  Opcode op = Opcode::HALT;
  Width width = Width::None;
  std::uint8_t dst = 0;
  std::uint8_t src1 = 0;
  std::uint8_t src2 = 0;
  std::int64_t imm = 0;
  bool has_imm = false;
  std::string target;              // branch label, empty otherwise
  std::uint32_t target_index = 0;  // resolved branch destination
  std::uint32_t static_id = 0;     // position in the program text

  bool operator==(const Instruction&) const = default;
};

// Category of one instruction. Memory accesses whose base register is the
// stack pointer (r31) count as Critical regardless of payload type.
Category classify(const Instruction& ins);

struct DataRegion {
  std::string name;
  std::uint64_t base = 0;  // word offset inside data segment
  std::uint64_t size = 0;  // in 64-bit words

  bool operator==(const DataRegion&) const = default;
};

struct InitWord {
  std::uint64_t index = 0;  // absolute word index in the data segment
  std::uint64_t bits = 0;   // raw payload
  bool is_fp = false;       // written as a float literal in the source

  bool operator==(const InitWord&) const = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::map<std::string, std::uint32_t> labels;
  std::uint32_t entry = 0;
  std::vector<DataRegion> data_regions;  // in declaration order
  std::vector<InitWord> init_words;
  std::uint64_t data_size = 0;   // total words covered by .data directives
  std::uint64_t stack_size = 64; // words reserved above the data segment

  std::uint64_t memory_words() const { return data_size + stack_size; }
  const DataRegion* find_region(std::string_view name) const;

  // Data+stack image with .init words applied; everything else is zero.
  std::vector<std::uint64_t> initial_image() const;

  bool operator==(const Program&) const = default;
};

struct AsmError : std::runtime_error {
  int line;
  AsmError(int line_, const std::string& msg);
};

// Two-pass assembler. Throws AsmError with a 1-based line number.
Program assemble(std::string_view source);
Program assemble_file(const std::string& path);

// Canonical listing that assembles back to an equal Program.
std::string disassemble(const Program& prog);

// ---------------------------------------------------------------------------
// Engine profiles

enum class Policy : std::uint8_t { Reject, Drop, Emulate };

struct EngineProfile {
  std::string name;
  Policy policy = Policy::Reject;
  std::set<std::pair<Opcode, Width>> supported;

  bool supports(Opcode op, Width w) const { return supported.count({op, w}) != 0; }

  // Profile with every opcode at every valid width.
  static EngineProfile full();
};

EngineProfile parse_profile(std::string_view text);
EngineProfile parse_profile_file(const std::string& path);

struct UnsupportedUse {
  std::uint32_t static_id = 0;
  Opcode op = Opcode::HALT;
  Width width = Width::None;
};

// Static instructions of `prog` outside the profile's supported set.
std::vector<UnsupportedUse> check_engine_support(const Program& prog,
                                                 const EngineProfile& profile);

} // namespace aisc
