#include "aisc/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "aisc/rng.hpp"

namespace aisc {

namespace {

Category width_category(Width w) {
  switch (w) {
    case Width::W32: return Category::FP32;
    case Width::W16: return Category::FP16;
    default: return Category::FP64;
  }
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct KindName {
  TechniqueKind kind;
  const char* name;
};

constexpr KindName kPlainKinds[] = {
    {TechniqueKind::Native, "native"},     {TechniqueKind::DPtoSP, "dptosp"},
    {TechniqueKind::DPtoHP, "dptohp"},     {TechniqueKind::SPtoHP, "sptohp"},
    {TechniqueKind::DPtoINT, "dptoint"},   {TechniqueKind::SPtoINT, "sptoint"},
    {TechniqueKind::DropDIV, "dropdiv"},   {TechniqueKind::DIVtoMUL12, "divtomul12"},
    {TechniqueKind::DIVtoMUL_NR, "divtomulnr"},
};

std::function<bool(std::uint32_t)> drop_pred(std::vector<std::uint32_t> ids) {
  return [ids = std::move(ids)](std::uint32_t id) {
    return std::binary_search(ids.begin(), ids.end(), id);
  };
}

EmulResult mul_to_add_emul(Width w, double a, double b, std::uint64_t cap) {
  MulToAddResult r = expand_mul_to_add(a, b, cap);
  EmulResult em;
  em.value = r.result;
  // A capped expansion falls back to one exact multiply at the native width.
  em.extra[int(width_category(w))] = r.cap_exceeded ? 1 : r.adds;
  em.cap_exceeded = r.cap_exceeded;
  return em;
}

std::string describe_use(const UnsupportedUse& u) {
  std::string s = opcode_name(u.op);
  switch (u.width) {
    case Width::W64: s += ".64"; break;
    case Width::W32: s += ".32"; break;
    case Width::W16: s += ".16"; break;
    case Width::None: break;
  }
  return s + " (static_id " + std::to_string(u.static_id) + ")";
}

} // namespace

Technique parse_technique(std::string_view s) {
  std::string_view head = s;
  std::string_view params;
  if (std::size_t colon = s.find(':'); colon != std::string_view::npos) {
    head = s.substr(0, colon);
    params = s.substr(colon + 1);
  }

  Technique t;
  bool takes_params = false;
  if (head == "drop") {
    t.kind = TechniqueKind::RandomStaticDrop;
    t.threshold = -1.0;
    takes_params = true;
  } else if (head == "multoadd") {
    t.kind = TechniqueKind::MULtoADD;
    takes_params = true;
  } else {
    bool found = false;
    for (const auto& [kind, name] : kPlainKinds)
      if (head == name) {
        t.kind = kind;
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("unknown technique '" + std::string(s) + "'");
  }
  if (!takes_params && !params.empty())
    throw std::invalid_argument("technique '" + std::string(head) + "' takes no parameters");

  std::string_view rest = params;
  while (!rest.empty()) {
    std::size_t comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);

    std::size_t eq = item.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("bad technique parameter '" + std::string(item) + "'");
    std::string key(item.substr(0, eq));
    std::string value(item.substr(eq + 1));
    char* end = nullptr;

    if (key == "t" && t.kind == TechniqueKind::RandomStaticDrop) {
      double v = std::strtod(value.c_str(), &end);
      if (end != value.c_str() + value.size() || value.empty() || !(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("drop threshold must be a number in [0,1]");
      t.threshold = v;
    } else if (key == "seed" && t.kind == TechniqueKind::RandomStaticDrop) {
      std::uint64_t v = std::strtoull(value.c_str(), &end, 10);
      if (end != value.c_str() + value.size() || value.empty())
        throw std::invalid_argument("bad seed '" + value + "'");
      t.seed = v;
    } else if (key == "cap" && t.kind == TechniqueKind::MULtoADD) {
      std::uint64_t v = std::strtoull(value.c_str(), &end, 10);
      if (end != value.c_str() + value.size() || value.empty() || v == 0)
        throw std::invalid_argument("cap must be a positive integer");
      t.add_cap = v;
    } else {
      throw std::invalid_argument("unknown parameter '" + key + "' for technique '" +
                                  std::string(head) + "'");
    }
  }

  if (t.kind == TechniqueKind::RandomStaticDrop && t.threshold < 0.0)
    throw std::invalid_argument("drop requires t=<fraction>");
  return t;
}

std::string technique_to_string(const Technique& t) {
  switch (t.kind) {
    case TechniqueKind::RandomStaticDrop: {
      std::string s = "drop:t=" + fmt_g(t.threshold);
      if (t.seed) s += ",seed=" + std::to_string(*t.seed);
      return s;
    }
    case TechniqueKind::MULtoADD:
      return t.add_cap == kDefaultAddCap ? "multoadd"
                                         : "multoadd:cap=" + std::to_string(t.add_cap);
    default:
      for (const auto& [kind, name] : kPlainKinds)
        if (kind == t.kind) return name;
      return "?";
  }
}

MulToAddResult expand_mul_to_add(double a, double b, std::uint64_t cap) {
  MulToAddResult out;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    out.result = a * b;
    return out;
  }
  const bool a_small = std::fabs(a) <= std::fabs(b);
  const double multiplier = a_small ? a : b;
  const double other = a_small ? b : a;
  const double m = round_to_nearest_int(std::fabs(multiplier));
  if (m == 0.0) {
    out.result = 0.0;
    return out;
  }
  if (m > double(cap)) {
    out.result = a * b;
    out.cap_exceeded = true;
    return out;
  }
  const std::uint64_t n = std::uint64_t(m);
  double acc = other;
  for (std::uint64_t i = 1; i < n; ++i) acc += other;
  out.result = multiplier < 0.0 ? -acc : acc;
  out.adds = n - 1;
  return out;
}

EmulResult div_to_mul(double dividend, double divisor, TechniqueKind variant,
                      Width width) {
  if (variant != TechniqueKind::DIVtoMUL12 && variant != TechniqueKind::DIVtoMUL_NR)
    throw std::logic_error("div_to_mul: not a DIVtoMUL variant");
  EmulResult em;
  em.extra[int(width_category(width))] = variant == TechniqueKind::DIVtoMUL12 ? 2 : 6;
  if (divisor == 0.0 || !std::isfinite(divisor)) {
    em.value = dividend / divisor;  // reciprocal path undefined; keep IEEE
    return em;
  }
  const double x0 = frcp12(divisor);
  if (variant == TechniqueKind::DIVtoMUL12) {
    em.value = dividend * x0;
    return em;
  }
  const double t1 = divisor * x0;
  const double t2 = t1 * x0;
  const double t3 = x0 + x0;
  const double x1 = t3 - t2;
  em.value = dividend * x1;
  return em;
}

ExecHooks make_breadth_hooks(TechniqueKind variant) {
  ExecHooks h;
  switch (variant) {
    case TechniqueKind::DPtoSP:
      h.operand_map = [](Width w, double x) {
        return w == Width::W64 ? discard_mantissa_bits(x, 32) : x;
      };
      h.reclassify = [](Category c) {
        return c == Category::FP64 ? Category::FP32 : c;
      };
      break;
    case TechniqueKind::DPtoHP:
      h.operand_map = [](Width w, double x) {
        return w == Width::W64 ? discard_mantissa_bits(x, 48) : x;
      };
      h.reclassify = [](Category c) {
        return c == Category::FP64 ? Category::FP16 : c;
      };
      break;
    case TechniqueKind::SPtoHP:
      h.operand_map = [](Width w, double x) {
        return w == Width::W32 ? discard_mantissa_bits(x, 16) : x;
      };
      h.reclassify = [](Category c) {
        return c == Category::FP32 ? Category::FP16 : c;
      };
      break;
    case TechniqueKind::DPtoINT:
      h.operand_map = [](Width w, double x) {
        return w == Width::W64 ? round_to_nearest_int(x) : x;
      };
      h.reclassify = [](Category c) {
        return c == Category::FP64 ? Category::Integer : c;
      };
      break;
    case TechniqueKind::SPtoINT:
      h.operand_map = [](Width w, double x) {
        return w == Width::W32 ? round_to_nearest_int(x) : x;
      };
      h.reclassify = [](Category c) {
        return c == Category::FP32 ? Category::Integer : c;
      };
      break;
    default:
      throw std::logic_error("make_breadth_hooks: not a Breadth variant");
  }
  return h;
}

TransformOutcome drop_div(const Program& p) {
  TransformOutcome out;
  out.program = p;
  for (const auto& ins : p.instructions)
    if (ins.op == Opcode::FDIV) out.dropped_static.push_back(ins.static_id);
  out.hooks.should_drop = drop_pred(out.dropped_static);
  out.notes = "drop all FP divisions (" + std::to_string(out.dropped_static.size()) +
              " static instructions)";
  return out;
}

TransformOutcome random_static_drop(const Program& p, double t, std::uint64_t seed) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("drop threshold must be in [0,1]");
  TransformOutcome out;
  out.program = p;
  SplitMix64 gen(seed);
  // One draw per FP-arithmetic static instruction, in static_id order.
  for (const auto& ins : p.instructions) {
    if (opcode_kind(ins.op) != OpKind::FpAlu) continue;
    if (gen.next_unit() < t) out.dropped_static.push_back(ins.static_id);
  }
  out.hooks.should_drop = drop_pred(out.dropped_static);
  out.notes = "random static drop t=" + fmt_g(t) + " seed=" + std::to_string(seed) +
              ": dropped " + std::to_string(out.dropped_static.size()) +
              " static instructions";
  return out;
}

TransformOutcome make_technique(const Program& p, const Technique& tech) {
  TransformOutcome out;
  out.program = p;
  switch (tech.kind) {
    case TechniqueKind::Native:
      out.notes = "native execution";
      return out;

    case TechniqueKind::DPtoSP:
    case TechniqueKind::DPtoHP:
    case TechniqueKind::SPtoHP:
    case TechniqueKind::DPtoINT:
    case TechniqueKind::SPtoINT:
      out.hooks = make_breadth_hooks(tech.kind);
      out.notes = "operand width reduction (" + technique_to_string(tech) + ")";
      return out;

    case TechniqueKind::DropDIV:
      return drop_div(p);

    case TechniqueKind::RandomStaticDrop:
      if (!tech.seed)
        throw std::invalid_argument("random static drop requires a resolved seed");
      return random_static_drop(p, tech.threshold, *tech.seed);

    case TechniqueKind::MULtoADD: {
      const std::uint64_t cap = tech.add_cap;
      out.hooks.op_emulator = [cap](Opcode op, Width w, double a,
                                    double b) -> std::optional<EmulResult> {
        if (op != Opcode::FMUL) return std::nullopt;
        return mul_to_add_emul(w, a, b, cap);
      };
      out.notes = "emulate FMUL by repeated addition, cap " + std::to_string(cap);
      return out;
    }

    case TechniqueKind::DIVtoMUL12:
    case TechniqueKind::DIVtoMUL_NR: {
      const TechniqueKind kind = tech.kind;
      out.hooks.op_emulator = [kind](Opcode op, Width w, double a,
                                     double b) -> std::optional<EmulResult> {
        if (op != Opcode::FDIV) return std::nullopt;
        return div_to_mul(a, b, kind, w);
      };
      out.notes = kind == TechniqueKind::DIVtoMUL12
                      ? "emulate FDIV by 12-bit reciprocal multiply"
                      : "emulate FDIV by reciprocal multiply with one Newton-Raphson step";
      return out;
    }
  }
  throw std::logic_error("make_technique: unhandled technique");
}

TransformOutcome lower_for_engine(const Program& p, const EngineProfile& e) {
  TransformOutcome out;
  out.program = p;
  const auto offenders = check_engine_support(p, e);
  if (offenders.empty()) {
    out.notes = "profile '" + e.name + "': program fully supported";
    return out;
  }

  for (const auto& o : offenders) {
    Category c = classify(p.instructions[o.static_id]);
    if (c == Category::Critical || c == Category::Integer)
      throw std::runtime_error("cannot lower for '" + e.name + "': " + describe_use(o) +
                               " is " + category_name(c) +
                               " and is never dropped or emulated");
  }

  if (e.policy == Policy::Reject) {
    std::string msg = "profile '" + e.name + "' rejects program; unsupported:";
    for (const auto& o : offenders) msg += " " + describe_use(o);
    throw std::runtime_error(msg);
  }

  if (e.policy == Policy::Drop) {
    for (const auto& o : offenders) out.dropped_static.push_back(o.static_id);
    std::sort(out.dropped_static.begin(), out.dropped_static.end());
    out.hooks.should_drop = drop_pred(out.dropped_static);
    out.notes = "profile '" + e.name + "': dropping " +
                std::to_string(out.dropped_static.size()) + " unsupported instructions";
    return out;
  }

  // Emulate policy: one rule per unsupported (opcode, width). Narrowing to a
  // supported width of the same opcode is preferred; otherwise FDIV and FMUL
  // fall back to reciprocal-multiply and repeated-addition emulation.
  struct Rule {
    enum { Narrow, DivNR, MulAdd } kind;
    int bits = 0;
    Width to = Width::None;
  };
  std::map<std::pair<Opcode, Width>, Rule> rules;
  std::string note_items;

  auto narrow_bits = [](Width from, Width to) {
    // Mantissa bits separating the precision classes: 52/20/4 kept bits.
    if (from == Width::W64 && to == Width::W32) return 32;
    if (from == Width::W64 && to == Width::W16) return 48;
    return 16;  // W32 -> W16
  };

  for (const auto& o : offenders) {
    auto key = std::make_pair(o.op, o.width);
    if (rules.count(key)) continue;
    Rule r{Rule::Narrow, 0, Width::None};
    bool resolved = false;
    const Width candidates[] = {Width::W32, Width::W16};
    for (Width nw : candidates) {
      if (int(nw) <= int(o.width)) continue;  // wider or same class
      if (e.supports(o.op, nw)) {
        r = {Rule::Narrow, narrow_bits(o.width, nw), nw};
        resolved = true;
        break;
      }
    }
    if (!resolved) {
      if (o.op == Opcode::FDIV) r = {Rule::DivNR, 0, Width::None};
      else if (o.op == Opcode::FMUL) r = {Rule::MulAdd, 0, Width::None};
      else
        throw std::runtime_error("not emulatable: " + describe_use(o) +
                                 " under profile '" + e.name + "'");
      resolved = true;
    }
    rules[key] = r;
    if (!note_items.empty()) note_items += ", ";
    note_items += describe_use(o);
  }

  out.hooks.op_emulator = [rules](Opcode op, Width w, double a,
                                  double b) -> std::optional<EmulResult> {
    auto it = rules.find({op, w});
    if (it == rules.end()) return std::nullopt;
    const Rule& r = it->second;
    switch (r.kind) {
      case Rule::DivNR:
        return div_to_mul(a, b, TechniqueKind::DIVtoMUL_NR, w);
      case Rule::MulAdd:
        return mul_to_add_emul(w, a, b, kDefaultAddCap);
      case Rule::Narrow: {
        EmulResult em;
        em.extra[int(width_category(r.to))] = 1;
        const double ta = discard_mantissa_bits(a, r.bits);
        switch (opcode_kind(op)) {
          case OpKind::FpAlu: {
            const double tb = discard_mantissa_bits(b, r.bits);
            double res = 0.0;
            switch (op) {
              case Opcode::FADD: res = ta + tb; break;
              case Opcode::FSUB: res = ta - tb; break;
              case Opcode::FMUL: res = ta * tb; break;
              case Opcode::FDIV: res = ta / tb; break;
              case Opcode::FMOV: res = ta; break;
              default: res = frcp12(ta); break;  // FRCP
            }
            em.value = discard_mantissa_bits(res, r.bits);
            break;
          }
          case OpKind::FpMem:
            em.value = ta;  // truncated transfer value
            break;
          default:
            // Conversions are exact in every precision class wide enough
            // for their integer operand; only the accounting narrows.
            em.value = a;
            break;
        }
        return em;
      }
    }
    return std::nullopt;
  };
  out.notes = "profile '" + e.name + "': emulating " + note_items;
  return out;
}

} // namespace aisc
