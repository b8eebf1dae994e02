#include <doctest.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "aisc/isa.hpp"
#include "aisc/kernels.hpp"

using namespace aisc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Counts lines whose mnemonic is an FP-ALU opcode, independent of the
// assembler.
int count_fp_alu_mnemonics(const std::string& source) {
  static const char* kNames[] = {"FADD", "FSUB", "FMUL", "FDIV", "FMOV", "FRCP"};
  int count = 0;
  std::istringstream in(source);
  std::string line;
  while (std::getline(in, line)) {
    std::string text = line.substr(0, line.find(';'));
    std::istringstream tokens(text);
    std::string tok;
    if (!(tokens >> tok)) continue;
    if (tok[0] == '.') continue;       // directive
    if (tok.back() == ':' && !(tokens >> tok)) continue;  // label-only line
    std::string base = tok.substr(0, tok.find('.'));
    for (const char* name : kNames)
      if (base == name) { ++count; break; }
  }
  return count;
}

} // namespace

TEST_CASE("assemble encodes opcode, width, and category") {
  Program p = assemble("FADD.64 f1, f2, f3\nHALT\n");
  REQUIRE(p.instructions.size() == 2);
  CHECK(p.instructions[0].op == Opcode::FADD);
  CHECK(p.instructions[0].width == Width::W64);
  CHECK(classify(p.instructions[0]) == Category::FP64);
  CHECK(p.instructions[1].op == Opcode::HALT);
  CHECK(p.instructions[0].static_id == 0);
  CHECK(p.instructions[1].static_id == 1);
}

TEST_CASE("assembling twice gives identical programs") {
  std::string src = read_file(default_kernel_dir() + "/kmeans.asm");
  CHECK(assemble(src) == assemble(src));
}

TEST_CASE("labels resolve forward and backward") {
  Program p = assemble(
      "top:    IADD r1, r1, #1\n"
      "        BLT r1, r2, top\n"
      "        BR end\n"
      "        IADD r3, r0, #9\n"
      "end:    HALT\n");
  CHECK(p.instructions[1].target_index == 0);
  CHECK(p.instructions[2].target_index == 4);
  CHECK(p.labels.at("top") == 0);
  CHECK(p.labels.at("end") == 4);
}

TEST_CASE("assembler errors carry line numbers") {
  CHECK_THROWS_AS(assemble("BR loop\nHALT\n"), AsmError);
  try {
    assemble("HALT\nBOGUS r1, r2\n");
    FAIL("expected AsmError");
  } catch (const AsmError& e) {
    CHECK(e.line == 2);
  }
  // width suffix on a non-FP opcode
  CHECK_THROWS_AS(assemble("IADD.64 r1, r2, r3\nHALT\n"), AsmError);
  // missing width suffix on an FP opcode
  CHECK_THROWS_AS(assemble("FADD f1, f2, f3\nHALT\n"), AsmError);
  // register out of range
  CHECK_THROWS_AS(assemble("IADD r32, r0, #1\nHALT\n"), AsmError);
  CHECK_THROWS_AS(assemble("FADD.64 f32, f0, f1\nHALT\n"), AsmError);
  // duplicate label
  CHECK_THROWS_AS(assemble("a: HALT\na: HALT\n"), AsmError);
  // duplicate region
  CHECK_THROWS_AS(assemble(".data x 4\n.data x 4\nHALT\n"), AsmError);
}

TEST_CASE("data directives build the memory image") {
  Program p = assemble(
      ".data a 4\n"
      ".data b 2\n"
      ".init a 1 3\n"
      ".init b 0 1.5\n"
      ".stack 16\n"
      "HALT\n");
  CHECK(p.data_size == 6);
  CHECK(p.stack_size == 16);
  CHECK(p.memory_words() == 22);
  const DataRegion* a = p.find_region("a");
  const DataRegion* b = p.find_region("b");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->base == 0);
  CHECK(a->size == 4);
  CHECK(b->base == 4);
  CHECK(b->size == 2);
  auto image = p.initial_image();
  REQUIRE(image.size() == 22);
  CHECK(image[1] == 3);  // integer literal stored raw
  CHECK(std::bit_cast<double>(image[4]) == 1.5);
  CHECK(image[0] == 0);
}

TEST_CASE("init literals distinguish integers from floats") {
  Program p = assemble(
      ".data v 4\n"
      ".init v 0 50\n"
      ".init v 1 1e-10\n"
      ".init v 2 -3\n"
      ".init v 3 2.0\n"
      "HALT\n");
  auto image = p.initial_image();
  CHECK(image[0] == 50);
  CHECK(std::bit_cast<double>(image[1]) == 1e-10);
  CHECK(std::int64_t(image[2]) == -3);
  CHECK(std::bit_cast<double>(image[3]) == 2.0);
  CHECK(p.init_words[0].is_fp == false);
  CHECK(p.init_words[1].is_fp == true);
}

TEST_CASE("region immediates resolve to base addresses") {
  Program p = assemble(
      ".data a 3\n"
      ".data b 5\n"
      "IADD r1, r0, #b\n"
      "HALT\n");
  CHECK(p.instructions[0].imm == 3);
}

TEST_CASE("classification follows kind and stack addressing") {
  auto ins = [](std::string_view src) {
    return assemble(std::string(src) + "\nHALT\n").instructions[0];
  };
  CHECK(classify(ins("BR next\nnext: IADD r1, r1, #0")) == Category::Critical);
  CHECK(classify(ins("IADD r1, r2, r3")) == Category::Integer);
  CHECK(classify(ins("ILD r1, r2")) == Category::Integer);
  CHECK(classify(ins("FMUL.32 f1, f2, f3")) == Category::FP32);
  CHECK(classify(ins("FADD.64 f1, f2, f3")) == Category::FP64);
  CHECK(classify(ins("FSUB.16 f1, f2, f3")) == Category::FP16);
  CHECK(classify(ins("FLD.64 f1, r2")) == Category::FP64);
  // stack-pointer based accesses are Critical whatever the payload
  CHECK(classify(ins("FLD.64 f1, r31")) == Category::Critical);
  CHECK(classify(ins("IST r1, r31")) == Category::Critical);
  CHECK(classify(ins("ITOF.32 f1, r2")) == Category::FP32);
  CHECK(classify(ins("FTOI.64 r1, f2")) == Category::FP64);
}

TEST_CASE("classification is a partition over every kernel") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    std::size_t counts[kCategoryCount] = {};
    for (const Instruction& ins : p.instructions) ++counts[int(classify(ins))];
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    CHECK(total == p.instructions.size());
  }
}

TEST_CASE("static ids are dense over every kernel") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    for (std::size_t i = 0; i < p.instructions.size(); ++i)
      CHECK(p.instructions[i].static_id == i);
  }
}

TEST_CASE("kmeans FP-ALU static count matches a text scan of the source") {
  KernelSpec spec = load_kernel(default_kernel_dir(), "kmeans");
  Program p = load_kernel_program(spec);
  int text_count = count_fp_alu_mnemonics(read_file(spec.source_path));
  int prog_count = 0;
  for (const Instruction& ins : p.instructions)
    if (opcode_kind(ins.op) == OpKind::FpAlu) ++prog_count;
  CHECK(prog_count == text_count);
}

TEST_CASE("disassemble round-trips every kernel") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    Program q = assemble(disassemble(p));
    CHECK(p == q);
  }
}

TEST_CASE("disassemble canonical forms") {
  CHECK(disassemble(assemble("FADD.64 f1, f2, f3\nHALT\n")) ==
        "FADD.64 f1, f2, f3\nHALT\n");
  CHECK(disassemble(Program{}) == "");
  CHECK(assemble("") == Program{});
}

TEST_CASE("full profile supports every opcode and width") {
  EngineProfile full = EngineProfile::full();
  for (int i = 0; i < kOpcodeCount; ++i) {
    Opcode op = Opcode(i);
    if (is_fp_kind(opcode_kind(op))) {
      CHECK(full.supports(op, Width::W64));
      CHECK(full.supports(op, Width::W32));
      CHECK(full.supports(op, Width::W16));
    } else {
      CHECK(full.supports(op, Width::None));
    }
  }
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    CHECK(check_engine_support(p, full).empty());
  }
}

TEST_CASE("unsupported instructions are listed exactly") {
  Program p = assemble("FDIV.64 f1, f2, f3\nHALT\n");
  EngineProfile e = parse_profile(
      "name = t\npolicy = emulate\n"
      "support = HALT, FADD, FSUB, FMUL, FMOV, FRCP, FLD, FST, ITOF, FTOI\n");
  auto missing = check_engine_support(p, e);
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].static_id == 0);
  CHECK(missing[0].op == Opcode::FDIV);
  CHECK(missing[0].width == Width::W64);
}

TEST_CASE("profile support grows monotonically") {
  EngineProfile small = parse_profile_file(default_profile_dir() + "/no_fp64_emulate.profile");
  EngineProfile big = EngineProfile::full();
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    auto missing_big = check_engine_support(p, big);
    auto missing_small = check_engine_support(p, small);
    // offenders under the superset profile are a subset of the other list
    for (const UnsupportedUse& u : missing_big) {
      bool found = std::any_of(missing_small.begin(), missing_small.end(),
                               [&](const UnsupportedUse& v) {
                                 return v.static_id == u.static_id;
                               });
      CHECK(found);
    }
  }
}

TEST_CASE("no-FP64 offender count equals the FP64 static count (kmeans)") {
  Program p = load_kernel_program(load_kernel(default_kernel_dir(), "kmeans"));
  EngineProfile e = parse_profile_file(default_profile_dir() + "/no_fp64_emulate.profile");
  std::size_t fp64 = 0;
  for (const Instruction& ins : p.instructions)
    if (classify(ins) == Category::FP64) ++fp64;
  CHECK(check_engine_support(p, e).size() == fp64);
}

TEST_CASE("shipped profiles parse and their union covers the ISA") {
  const char* names[] = {"full", "no_fdiv_emulate", "no_fdiv_drop", "no_fp64_emulate"};
  std::set<std::pair<Opcode, Width>> covered;
  for (const char* n : names) {
    EngineProfile e = parse_profile_file(default_profile_dir() + "/" + n + ".profile");
    CHECK(e.name == n);
    covered.insert(e.supported.begin(), e.supported.end());
  }
  CHECK(covered == EngineProfile::full().supported);
}

TEST_CASE("profile parsing rejects malformed input") {
  CHECK_THROWS(parse_profile("name = x\npolicy = maybe\n"));
  CHECK_THROWS(parse_profile("policy = drop\n"));           // missing name
  CHECK_THROWS(parse_profile("name = x\n"));                // missing policy
  CHECK_THROWS(parse_profile("name = x\npolicy = drop\nsupport = FADD.48\n"));
  CHECK_THROWS(parse_profile("name = x\npolicy = drop\nsupport = IADD.64\n"));
  CHECK_THROWS(parse_profile("name = x\npolicy = drop\nsupport = NOSUCH\n"));
}
