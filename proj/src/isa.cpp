#include "aisc/isa.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace aisc {

namespace {

// Operand shape of an instruction line after the mnemonic.
enum class Sig : std::uint8_t {
  None,     // HALT
  Label,    // BR target
  RRLabel,  // BEQ r,r,target
  FFLabel,  // FBLT f,f,target
  RRRorI,   // IADD r,r,(r|#imm)
  RROffOpt, // ILD/IST r,rbase[,#imm]
  FFF,      // FADD f,f,f
  FF,       // FMOV f,f
  FR,       // FLD/FST/ITOF f,r
  RF,       // FTOI r,f
};

struct OpInfo {
  const char* name;
  OpKind kind;
  Sig sig;
};

constexpr OpInfo kOps[kOpcodeCount] = {
    {"HALT", OpKind::Control, Sig::None},
    {"BR", OpKind::Control, Sig::Label},
    {"BEQ", OpKind::Control, Sig::RRLabel},
    {"BNE", OpKind::Control, Sig::RRLabel},
    {"BLT", OpKind::Control, Sig::RRLabel},
    {"BGE", OpKind::Control, Sig::RRLabel},
    {"FBLT", OpKind::Control, Sig::FFLabel},
    {"FBGE", OpKind::Control, Sig::FFLabel},
    {"IADD", OpKind::IntAlu, Sig::RRRorI},
    {"ISUB", OpKind::IntAlu, Sig::RRRorI},
    {"IMUL", OpKind::IntAlu, Sig::RRRorI},
    {"IDIV", OpKind::IntAlu, Sig::RRRorI},
    {"IAND", OpKind::IntAlu, Sig::RRRorI},
    {"IOR", OpKind::IntAlu, Sig::RRRorI},
    {"IXOR", OpKind::IntAlu, Sig::RRRorI},
    {"ISHL", OpKind::IntAlu, Sig::RRRorI},
    {"ISHR", OpKind::IntAlu, Sig::RRRorI},
    {"ILD", OpKind::IntMem, Sig::RROffOpt},
    {"IST", OpKind::IntMem, Sig::RROffOpt},
    {"FADD", OpKind::FpAlu, Sig::FFF},
    {"FSUB", OpKind::FpAlu, Sig::FFF},
    {"FMUL", OpKind::FpAlu, Sig::FFF},
    {"FDIV", OpKind::FpAlu, Sig::FFF},
    {"FMOV", OpKind::FpAlu, Sig::FF},
    {"FRCP", OpKind::FpAlu, Sig::FF},
    {"FLD", OpKind::FpMem, Sig::FR},
    {"FST", OpKind::FpMem, Sig::FR},
    {"ITOF", OpKind::FpCvt, Sig::FR},
    {"FTOI", OpKind::FpCvt, Sig::RF},
};

const OpInfo& info(Opcode op) { return kOps[static_cast<int>(op)]; }

std::optional<Opcode> lookup_mnemonic(std::string_view name) {
  for (int i = 0; i < kOpcodeCount; ++i)
    if (name == kOps[i].name) return static_cast<Opcode>(i);
  return std::nullopt;
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Cursor over one source line. Columns are 1-based.
struct LineParser {
  std::string_view s;
  std::size_t pos = 0;
  int line;

  explicit LineParser(std::string_view text, int line_) : s(text), line(line_) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw AsmError(line, msg + " (column " + std::to_string(pos + 1) + ")");
  }

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= s.size();
  }

  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string_view ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && ident_char(s[pos])) ++pos;
    if (pos == start) fail("expected identifier");
    return s.substr(start, pos - start);
  }

  // Mnemonic token: an identifier plus an optional dotted width suffix.
  std::string_view mnemonic() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (ident_char(s[pos]) || s[pos] == '.')) ++pos;
    if (pos == start) fail("expected mnemonic");
    return s.substr(start, pos - start);
  }

  // Signed decimal integer.
  std::int64_t integer() {
    skip_ws();
    std::size_t start = pos;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start || (pos == start + 1 && !std::isdigit(static_cast<unsigned char>(s[start]))))
      fail("expected integer");
    return std::strtoll(std::string(s.substr(start, pos - start)).c_str(), nullptr, 10);
  }

  // Number token for .init: integer or floating-point literal.
  std::string_view number_token() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != ',') ++pos;
    if (pos == start) fail("expected number");
    return s.substr(start, pos - start);
  }

  std::uint8_t reg(char file) {
    skip_ws();
    std::size_t start = pos;
    if (pos >= s.size() || s[pos] != file)
      fail(std::string("expected ") + (file == 'r' ? "integer" : "FP") + " register");
    ++pos;
    std::size_t digits = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == digits) fail("expected register number");
    long n = std::strtol(std::string(s.substr(digits, pos - digits)).c_str(), nullptr, 10);
    if (n < 0 || n > 31) {
      pos = start;
      fail("register out of range");
    }
    return static_cast<std::uint8_t>(n);
  }
};

bool parse_double_token(std::string_view tok, double* out) {
  std::string t(tok);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

bool parse_int_token(std::string_view tok, std::int64_t* out) {
  std::string t(tok);
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || t.empty()) return false;
  *out = v;
  return true;
}

bool looks_like_float(std::string_view tok) {
  return tok.find_first_of(".eEnN") != std::string_view::npos ||
         tok.find("inf") != std::string_view::npos;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep .init float words recognisably floating-point on round trip.
  if (s.find_first_of(".eEnia") == std::string::npos) s += ".0";
  return s;
}

} // namespace

AsmError::AsmError(int line_, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}

const char* opcode_name(Opcode op) { return info(op).name; }

OpKind opcode_kind(Opcode op) { return info(op).kind; }

bool is_fp_kind(OpKind k) {
  return k == OpKind::FpAlu || k == OpKind::FpMem || k == OpKind::FpCvt;
}

const char* category_name(Category c) {
  switch (c) {
    case Category::Critical: return "Critical";
    case Category::Integer: return "Integer";
    case Category::FP64: return "FP64";
    case Category::FP32: return "FP32";
    case Category::FP16: return "FP16";
  }
  return "?";
}

Category classify(const Instruction& ins) {
  OpKind k = opcode_kind(ins.op);
  switch (k) {
    case OpKind::Control:
      return Category::Critical;
    case OpKind::IntAlu:
      return Category::Integer;
    case OpKind::IntMem:
    case OpKind::FpMem:
      if (ins.src1 == 31) return Category::Critical;  // stack access
      if (k == OpKind::IntMem) return Category::Integer;
      break;
    case OpKind::FpAlu:
    case OpKind::FpCvt:
      break;
  }
  switch (ins.width) {
    case Width::W64: return Category::FP64;
    case Width::W32: return Category::FP32;
    case Width::W16: return Category::FP16;
    case Width::None: break;
  }
  return Category::FP64;  // unreachable for valid instructions
}

const DataRegion* Program::find_region(std::string_view name) const {
  for (const auto& r : data_regions)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<std::uint64_t> Program::initial_image() const {
  std::vector<std::uint64_t> mem(memory_words(), 0);
  for (const auto& w : init_words) mem.at(w.index) = w.bits;
  return mem;
}

Program assemble(std::string_view source) {
  Program prog;

  struct PendingInit {
    int line;
    std::string region;
    std::uint64_t idx;
    std::string value;
  };
  std::vector<PendingInit> inits;

  struct PendingIns {
    int line;
    std::string text;
  };
  std::vector<PendingIns> pending;

  // Pass 1: directives, labels, and instruction extraction.
  int line_no = 0;
  std::size_t cursor = 0;
  while (cursor <= source.size()) {
    std::size_t nl = source.find('\n', cursor);
    std::string_view raw = source.substr(
        cursor, nl == std::string_view::npos ? std::string_view::npos : nl - cursor);
    cursor = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    ++line_no;

    std::string_view text = raw.substr(0, raw.find(';'));
    LineParser p(text, line_no);
    if (p.at_end()) continue;

    if (p.consume('.')) {
      std::string_view dir = p.ident();
      if (dir == "data") {
        std::string name(p.ident());
        std::int64_t size = p.integer();
        if (size <= 0) p.fail("region size must be positive");
        if (prog.find_region(name)) p.fail("duplicate region '" + name + "'");
        prog.data_regions.push_back({name, prog.data_size, std::uint64_t(size)});
        prog.data_size += std::uint64_t(size);
      } else if (dir == "init") {
        std::string name(p.ident());
        std::int64_t idx = p.integer();
        if (idx < 0) p.fail("init index must be non-negative");
        inits.push_back({line_no, name, std::uint64_t(idx), std::string(p.number_token())});
      } else if (dir == "stack") {
        std::int64_t n = p.integer();
        if (n <= 0) p.fail("stack size must be positive");
        prog.stack_size = std::uint64_t(n);
      } else {
        p.fail("unknown directive '." + std::string(dir) + "'");
      }
      if (!p.at_end()) p.fail("trailing text after directive");
      continue;
    }

    // Optional label, then optional instruction on the same line.
    std::size_t save = p.pos;
    std::string_view first = p.ident();
    if (p.consume(':')) {
      std::string label(first);
      if (prog.labels.count(label)) p.fail("duplicate label '" + label + "'");
      prog.labels[label] = std::uint32_t(pending.size());
    } else {
      p.pos = save;
    }
    if (!p.at_end())
      pending.push_back({line_no, std::string(text.substr(p.pos))});
  }

  // Resolve .init lines now that every region is known.
  for (const auto& init : inits) {
    const DataRegion* r = prog.find_region(init.region);
    if (!r) throw AsmError(init.line, "unknown region '" + init.region + "'");
    if (init.idx >= r->size) throw AsmError(init.line, "init index outside region");
    InitWord w;
    w.index = r->base + init.idx;
    if (looks_like_float(init.value)) {
      double d;
      if (!parse_double_token(init.value, &d))
        throw AsmError(init.line, "bad init value '" + init.value + "'");
      w.bits = std::bit_cast<std::uint64_t>(d);
      w.is_fp = true;
    } else {
      std::int64_t v;
      if (!parse_int_token(init.value, &v))
        throw AsmError(init.line, "bad init value '" + init.value + "'");
      w.bits = std::uint64_t(v);
      w.is_fp = false;
    }
    prog.init_words.push_back(w);
  }

  // Pass 2: parse instructions with all labels and regions known.
  auto parse_imm = [&](LineParser& p) -> std::int64_t {
    p.skip_ws();
    if (p.pos < p.s.size() &&
        (p.s[p.pos] == '-' || p.s[p.pos] == '+' ||
         std::isdigit(static_cast<unsigned char>(p.s[p.pos]))))
      return p.integer();
    std::string name(p.ident());
    const DataRegion* r = prog.find_region(name);
    if (!r) p.fail("unknown region '" + name + "' in immediate");
    return std::int64_t(r->base);
  };

  auto parse_target = [&](LineParser& p, Instruction& ins) {
    std::string label(p.ident());
    auto it = prog.labels.find(label);
    if (it == prog.labels.end()) p.fail("unresolved label '" + label + "'");
    ins.target = label;
    ins.target_index = it->second;
  };

  for (const auto& item : pending) {
    LineParser p(item.text, item.line);
    std::string_view mnem = p.mnemonic();

    std::string_view base = mnem;
    Width width = Width::None;
    if (std::size_t dot = mnem.find('.'); dot != std::string_view::npos) {
      base = mnem.substr(0, dot);
      std::string_view suffix = mnem.substr(dot + 1);
      if (suffix == "64") width = Width::W64;
      else if (suffix == "32") width = Width::W32;
      else if (suffix == "16") width = Width::W16;
      else p.fail("bad width suffix '." + std::string(suffix) + "'");
    }

    auto op = lookup_mnemonic(base);
    if (!op) p.fail("unknown mnemonic '" + std::string(base) + "'");
    const OpInfo& oi = info(*op);
    if (is_fp_kind(oi.kind) && width == Width::None)
      p.fail(std::string(base) + " requires a width suffix");
    if (!is_fp_kind(oi.kind) && width != Width::None)
      p.fail("width suffix on non-FP opcode");

    Instruction ins;
    ins.op = *op;
    ins.width = width;
    ins.static_id = std::uint32_t(prog.instructions.size());

    switch (oi.sig) {
      case Sig::None:
        break;
      case Sig::Label:
        parse_target(p, ins);
        break;
      case Sig::RRLabel:
        ins.src1 = p.reg('r');
        p.expect(',');
        ins.src2 = p.reg('r');
        p.expect(',');
        parse_target(p, ins);
        break;
      case Sig::FFLabel:
        ins.src1 = p.reg('f');
        p.expect(',');
        ins.src2 = p.reg('f');
        p.expect(',');
        parse_target(p, ins);
        break;
      case Sig::RRRorI:
        ins.dst = p.reg('r');
        p.expect(',');
        ins.src1 = p.reg('r');
        p.expect(',');
        if (p.consume('#')) {
          ins.imm = parse_imm(p);
          ins.has_imm = true;
        } else {
          ins.src2 = p.reg('r');
        }
        break;
      case Sig::RROffOpt:
        ins.dst = p.reg('r');
        p.expect(',');
        ins.src1 = p.reg('r');
        if (p.consume(',')) {
          p.expect('#');
          ins.imm = parse_imm(p);
        }
        ins.has_imm = true;  // offset always participates, default 0
        break;
      case Sig::FFF:
        ins.dst = p.reg('f');
        p.expect(',');
        ins.src1 = p.reg('f');
        p.expect(',');
        ins.src2 = p.reg('f');
        break;
      case Sig::FF:
        ins.dst = p.reg('f');
        p.expect(',');
        ins.src1 = p.reg('f');
        break;
      case Sig::FR:
        ins.dst = p.reg('f');
        p.expect(',');
        ins.src1 = p.reg('r');
        break;
      case Sig::RF:
        ins.dst = p.reg('r');
        p.expect(',');
        ins.src1 = p.reg('f');
        break;
    }
    if (!p.at_end()) p.fail("trailing text after instruction");
    prog.instructions.push_back(std::move(ins));
  }

  for (const auto& [label, index] : prog.labels)
    if (index > prog.instructions.size())
      throw AsmError(0, "label '" + label + "' out of range");

  return prog;
}

Program assemble_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return assemble(ss.str());
}

std::string disassemble(const Program& prog) {
  std::string out;
  auto emit = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };

  if (prog.stack_size != 64) emit(".stack " + std::to_string(prog.stack_size));
  for (const auto& r : prog.data_regions)
    emit(".data " + r.name + " " + std::to_string(r.size));
  for (const auto& w : prog.init_words) {
    const DataRegion* home = nullptr;
    for (const auto& r : prog.data_regions)
      if (w.index >= r.base && w.index < r.base + r.size) home = &r;
    std::string value = w.is_fp ? fmt_double(std::bit_cast<double>(w.bits))
                                : std::to_string(std::int64_t(w.bits));
    emit(".init " + home->name + " " + std::to_string(w.index - home->base) + " " + value);
  }

  // Labels per index, alphabetical within an index for determinism.
  std::map<std::uint32_t, std::vector<std::string>> by_index;
  for (const auto& [label, index] : prog.labels) by_index[index].push_back(label);

  for (std::uint32_t i = 0; i <= prog.instructions.size(); ++i) {
    if (auto it = by_index.find(i); it != by_index.end())
      for (const auto& label : it->second) emit(label + ":");
    if (i == prog.instructions.size()) break;

    const Instruction& ins = prog.instructions[i];
    const OpInfo& oi = info(ins.op);
    std::string text = oi.name;
    switch (ins.width) {
      case Width::W64: text += ".64"; break;
      case Width::W32: text += ".32"; break;
      case Width::W16: text += ".16"; break;
      case Width::None: break;
    }
    auto rn = [](std::uint8_t n) { return "r" + std::to_string(n); };
    auto fn = [](std::uint8_t n) { return "f" + std::to_string(n); };
    switch (oi.sig) {
      case Sig::None:
        break;
      case Sig::Label:
        text += " " + ins.target;
        break;
      case Sig::RRLabel:
        text += " " + rn(ins.src1) + ", " + rn(ins.src2) + ", " + ins.target;
        break;
      case Sig::FFLabel:
        text += " " + fn(ins.src1) + ", " + fn(ins.src2) + ", " + ins.target;
        break;
      case Sig::RRRorI:
        text += " " + rn(ins.dst) + ", " + rn(ins.src1) + ", ";
        text += ins.has_imm ? "#" + std::to_string(ins.imm) : rn(ins.src2);
        break;
      case Sig::RROffOpt:
        text += " " + rn(ins.dst) + ", " + rn(ins.src1);
        if (ins.imm != 0) text += ", #" + std::to_string(ins.imm);
        break;
      case Sig::FFF:
        text += " " + fn(ins.dst) + ", " + fn(ins.src1) + ", " + fn(ins.src2);
        break;
      case Sig::FF:
        text += " " + fn(ins.dst) + ", " + fn(ins.src1);
        break;
      case Sig::FR:
        text += " " + fn(ins.dst) + ", " + rn(ins.src1);
        break;
      case Sig::RF:
        text += " " + rn(ins.dst) + ", " + fn(ins.src1);
        break;
    }
    emit(text);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engine profiles

namespace {

std::vector<Width> valid_widths(Opcode op) {
  if (is_fp_kind(opcode_kind(op)))
    return {Width::W64, Width::W32, Width::W16};
  return {Width::None};
}

} // namespace

EngineProfile EngineProfile::full() {
  EngineProfile e;
  e.name = "full";
  e.policy = Policy::Reject;
  for (int i = 0; i < kOpcodeCount; ++i) {
    Opcode op = static_cast<Opcode>(i);
    for (Width w : valid_widths(op)) e.supported.insert({op, w});
  }
  return e;
}

EngineProfile parse_profile(std::string_view text) {
  EngineProfile e;
  bool saw_policy = false;
  int line_no = 0;
  std::size_t cursor = 0;
  while (cursor <= text.size()) {
    std::size_t nl = text.find('\n', cursor);
    std::string_view raw = text.substr(
        cursor, nl == std::string_view::npos ? std::string_view::npos : nl - cursor);
    cursor = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string_view line = raw.substr(0, raw.find('#'));
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    std::size_t last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("profile line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string_view v) {
      std::size_t b = v.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string();
      std::size_t e2 = v.find_last_not_of(" \t");
      return std::string(v.substr(b, e2 - b + 1));
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "name") {
      e.name = value;
    } else if (key == "policy") {
      saw_policy = true;
      if (value == "reject") e.policy = Policy::Reject;
      else if (value == "drop") e.policy = Policy::Drop;
      else if (value == "emulate") e.policy = Policy::Emulate;
      else throw std::runtime_error("profile line " + std::to_string(line_no) +
                                    ": unknown policy '" + value + "'");
    } else if (key == "support") {
      if (value == "all") {
        e.supported = EngineProfile::full().supported;
        continue;
      }
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::size_t b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        std::size_t en = item.find_last_not_of(" \t");
        item = item.substr(b, en - b + 1);

        std::string base = item;
        std::optional<Width> w;
        if (std::size_t dot = item.find('.'); dot != std::string::npos) {
          base = item.substr(0, dot);
          std::string suffix = item.substr(dot + 1);
          if (suffix == "64") w = Width::W64;
          else if (suffix == "32") w = Width::W32;
          else if (suffix == "16") w = Width::W16;
          else throw std::runtime_error("profile line " + std::to_string(line_no) +
                                        ": bad width '" + suffix + "'");
        }
        auto op = lookup_mnemonic(base);
        if (!op)
          throw std::runtime_error("profile line " + std::to_string(line_no) +
                                   ": unknown mnemonic '" + base + "'");
        if (w) {
          if (!is_fp_kind(opcode_kind(*op)))
            throw std::runtime_error("profile line " + std::to_string(line_no) +
                                     ": width on non-FP mnemonic '" + base + "'");
          e.supported.insert({*op, *w});
        } else {
          for (Width vw : valid_widths(*op)) e.supported.insert({*op, vw});
        }
      }
    } else {
      throw std::runtime_error("profile line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
  if (e.name.empty()) throw std::runtime_error("profile missing name=");
  if (!saw_policy) throw std::runtime_error("profile missing policy=");
  return e;
}

EngineProfile parse_profile_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

std::vector<UnsupportedUse> check_engine_support(const Program& prog,
                                                 const EngineProfile& profile) {
  std::vector<UnsupportedUse> out;
  for (const auto& ins : prog.instructions)
    if (!profile.supports(ins.op, ins.width))
      out.push_back({ins.static_id, ins.op, ins.width});
  return out;
}

} // namespace aisc
