#include "aisc/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "aisc/rng.hpp"

namespace aisc {

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Drop-technique seed for one cell: global seed folded with the kernel
// name, the unresolved technique string, and the replicate index.
std::uint64_t derive_drop_seed(std::uint64_t global, const std::string& kernel,
                               const std::string& technique, std::uint32_t replicate) {
  std::uint64_t s = derive_seed(global, kernel);
  s = derive_seed(s, technique);
  return derive_seed(s, std::to_string(replicate));
}

Technique resolve_technique(const Technique& tech, const std::string& kernel,
                            const RunConfig& cfg, std::uint32_t replicate) {
  Technique t = tech;
  if (t.kind == TechniqueKind::RandomStaticDrop && !t.seed)
    t.seed = derive_drop_seed(cfg.seed, kernel, technique_to_string(tech), replicate);
  return t;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

const char* const kMixHeader =
    "kernel,technique,status,total_dynamic,rel_instr,"
    "critical,integer,fp64,fp32,fp16,"
    "emu_critical,emu_integer,emu_fp64,emu_fp32,emu_fp16,"
    "dropped_dynamic,cap_exceeded\n";

const char* const kTradeoffHeader =
    "kernel,technique,metric,rel_energy_var,rel_energy_combined,"
    "accuracy_loss_pct,random_baseline_pct\n";

nlohmann::ordered_json counts_json(const std::array<std::uint64_t, kCategoryCount>& a) {
  nlohmann::ordered_json j;
  j["critical"] = a[0];
  j["integer"] = a[1];
  j["fp64"] = a[2];
  j["fp32"] = a[3];
  j["fp16"] = a[4];
  return j;
}

} // namespace

std::vector<Technique> default_techniques(bool drop_sweep) {
  std::vector<Technique> list;
  auto add = [&](std::string_view s) { list.push_back(parse_technique(s)); };
  add("native");
  add("dptosp");
  add("dptohp");
  add("dptoint");
  add("dropdiv");
  if (drop_sweep) {
    for (std::string_view t : {"0.01", "0.04", "0.07", "0.1"})
      for (int rep = 0; rep < 3; ++rep)
        add("drop:t=" + std::string(t));
  } else {
    add("drop:t=0.01");
    add("drop:t=0.04");
    add("drop:t=0.07");
  }
  add("multoadd");
  add("divtomul12");
  add("divtomulnr");
  return list;
}

KernelContext prepare_kernel(const KernelSpec& spec, const RunConfig& cfg) {
  KernelContext ctx;
  ctx.spec = spec;
  ctx.prog = load_kernel_program(spec);
  const DataRegion* out = ctx.prog.find_region(spec.output);
  if (!out)
    throw std::runtime_error("kernel '" + spec.name + "' has no region '" +
                             spec.output + "'");
  ctx.input_seed = derive_seed(cfg.seed, spec.name);
  ctx.image = generate_input(spec, ctx.prog, ctx.input_seed);

  std::uint64_t native_budget =
      spec.native_budget ? spec.native_budget : kFallbackBudget;
  RunResult rr = run(ctx.prog, ctx.image, ExecHooks{}, native_budget);
  if (rr.status == RunStatus::Trap)
    throw std::runtime_error("kernel '" + spec.name + "' trapped natively: " +
                             rr.trap_reason);
  if (rr.status == RunStatus::BudgetExceeded)
    throw std::runtime_error("kernel '" + spec.name + "' exceeded its native budget");
  ctx.native_stats = rr.stats;
  ctx.native_energy = energy(rr.stats, cfg.epi);
  ctx.reference = read_output(rr.final_state, out->base, out->size);
  ctx.baseline = random_baseline(ctx.reference, spec.metric, kBaselineSeed,
                                 spec.range, int(spec.width), int(spec.height));
  ctx.budget = std::uint64_t(
      std::llround(double(rr.stats.total_dynamic) * cfg.budget_mult));
  return ctx;
}

ExperimentRecord run_experiment(const KernelContext& ctx, const Technique& tech,
                                const RunConfig& cfg) {
  const KernelSpec& spec = ctx.spec;
  Technique t = resolve_technique(tech, spec.name, cfg, 0);

  ExperimentRecord rec;
  rec.kernel = spec.name;
  rec.technique = technique_to_string(t);
  rec.metric = metric_name(spec.metric);
  rec.input_seed = ctx.input_seed;
  rec.random_baseline = ctx.baseline;

  auto finish_ok = [&](const MachineState& state, const Program& prog) {
    const DataRegion& out = *prog.find_region(spec.output);
    rec.status = "ok";
    rec.output = read_output(state, out.base, out.size);
    rec.accuracy_loss = accuracy_loss(rec.output, ctx.reference, spec.metric,
                                      spec.range, int(spec.width), int(spec.height));
  };

  auto fill_ratios = [&] {
    rec.rel_instr = double(rec.stats.total_dynamic) /
                    double(ctx.native_stats.total_dynamic);
    rec.rel_energy_var = energy(rec.stats, cfg.epi) / ctx.native_energy;
    rec.rel_energy_combined =
        combined_relative(rec.rel_energy_var, cfg.fixed_fraction);
  };

  if (t.kind == TechniqueKind::Native) {
    rec.stats = ctx.native_stats;
    fill_ratios();
    rec.status = "ok";
    rec.output = ctx.reference;
    rec.accuracy_loss = accuracy_loss(ctx.reference, ctx.reference, spec.metric,
                                      spec.range, int(spec.width), int(spec.height));
    return rec;
  }

  TransformOutcome out = make_technique(ctx.prog, t);
  RunResult rr = run(out.program, ctx.image, out.hooks, ctx.budget);
  rec.stats = rr.stats;
  fill_ratios();

  if (rr.status == RunStatus::Trap) {
    rec.status = "trap";
    rec.trap_reason = rr.trap_reason;
  } else if (rr.status == RunStatus::BudgetExceeded) {
    rec.status = "budget-exceeded";
  } else if (rr.stats.cap_exceeded > 0) {
    rec.status = "cap-exceeded";
  } else if (rec.rel_energy_var > 1.4) {
    rec.status = "infeasible-energy";
  } else {
    finish_ok(rr.final_state, out.program);
  }
  return rec;
}

std::vector<ExperimentRecord> run_matrix(const RunConfig& cfg) {
  std::string kdir = cfg.kernel_dir.empty() ? default_kernel_dir() : cfg.kernel_dir;

  std::vector<KernelContext> contexts;
  contexts.reserve(cfg.kernels.size());
  for (const std::string& name : cfg.kernels)
    contexts.push_back(prepare_kernel(load_kernel(kdir, name), cfg));

  // Replicate index of each configured technique among its equals, so
  // repeated unseeded drop entries get distinct derived seeds.
  std::vector<std::uint32_t> replicate(cfg.techniques.size(), 0);
  for (std::size_t i = 0; i < cfg.techniques.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cfg.techniques[j] == cfg.techniques[i]) ++replicate[i];

  struct Cell {
    std::size_t kernel;
    Technique tech;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < contexts.size(); ++k)
    for (std::size_t i = 0; i < cfg.techniques.size(); ++i)
      cells.push_back({k, resolve_technique(cfg.techniques[i],
                                            contexts[k].spec.name, cfg,
                                            replicate[i])});

  std::vector<ExperimentRecord> records(cells.size());
  auto run_cell = [&](std::size_t i) {
    records[i] = run_experiment(contexts[cells[i].kernel], cells[i].tech, cfg);
  };
  if (cfg.jobs <= 1 || cells.size() <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) run_cell(i);
    };
    unsigned n = std::min<std::size_t>(cfg.jobs, cells.size());
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_text_file(dir / "mix.csv", mix_csv(records));
    write_text_file(dir / "tradeoff.csv", tradeoff_csv(records));
    write_text_file(dir / "report.json", report_json(records, cfg));
    for (std::size_t i = 0; i < records.size(); ++i) {
      const ExperimentRecord& rec = records[i];
      const KernelSpec& spec = contexts[cells[i].kernel].spec;
      if (!spec.image || rec.status != "ok") continue;
      fs::create_directories(dir / "pgm");
      std::string name = rec.kernel + "__" + sanitize_technique(rec.technique) + ".pgm";
      write_text_file(dir / "pgm" / name,
                      pgm_bytes(rec.output, spec.width, spec.height, spec.range));
    }
  }
  return records;
}

std::string mix_csv(const std::vector<ExperimentRecord>& records) {
  std::string csv = kMixHeader;
  for (const ExperimentRecord& r : records) {
    csv += r.kernel + "," + r.technique + "," + r.status + ",";
    csv += std::to_string(r.stats.total_dynamic) + "," + fmt_num(r.rel_instr);
    for (std::uint64_t c : r.stats.dynamic_counts) csv += "," + std::to_string(c);
    for (std::uint64_t c : r.stats.emulation_extra) csv += "," + std::to_string(c);
    csv += "," + std::to_string(r.stats.dropped_dynamic);
    csv += "," + std::to_string(r.stats.cap_exceeded) + "\n";
  }
  return csv;
}

std::string tradeoff_csv(const std::vector<ExperimentRecord>& records) {
  std::string csv = kTradeoffHeader;
  for (const ExperimentRecord& r : records) {
    if (r.status != "ok") continue;
    csv += r.kernel + "," + r.technique + "," + r.metric + ",";
    csv += fmt_num(r.rel_energy_var) + "," + fmt_num(r.rel_energy_combined) + ",";
    csv += fmt_num(*r.accuracy_loss) + "," + fmt_num(r.random_baseline) + "\n";
  }
  return csv;
}

std::string report_json(const std::vector<ExperimentRecord>& records,
                        const RunConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json config;
  config["seed"] = cfg.seed;
  config["fixed_fraction"] = cfg.fixed_fraction;
  config["budget_mult"] = cfg.budget_mult;
  nlohmann::ordered_json epi;
  epi["critical"] = cfg.epi[Category::Critical];
  epi["integer"] = cfg.epi[Category::Integer];
  epi["fp64"] = cfg.epi[Category::FP64];
  epi["fp32"] = cfg.epi[Category::FP32];
  epi["fp16"] = cfg.epi[Category::FP16];
  config["epi"] = epi;
  config["kernels"] = cfg.kernels;
  std::vector<std::string> techniques;
  for (const Technique& t : cfg.techniques)
    techniques.push_back(technique_to_string(t));
  config["techniques"] = techniques;
  j["config"] = config;

  nlohmann::ordered_json recs = nlohmann::ordered_json::array();
  for (const ExperimentRecord& r : records) {
    nlohmann::ordered_json rj;
    rj["kernel"] = r.kernel;
    rj["technique"] = r.technique;
    rj["metric"] = r.metric;
    rj["status"] = r.status;
    if (!r.trap_reason.empty()) rj["trap_reason"] = r.trap_reason;
    rj["input_seed"] = r.input_seed;
    rj["total_dynamic"] = r.stats.total_dynamic;
    rj["rel_instr"] = r.rel_instr;
    rj["mix"] = counts_json(r.stats.dynamic_counts);
    rj["emulation_extra"] = counts_json(r.stats.emulation_extra);
    rj["dropped_dynamic"] = r.stats.dropped_dynamic;
    rj["cap_exceeded"] = r.stats.cap_exceeded;
    rj["rel_energy_var"] = r.rel_energy_var;
    rj["rel_energy_combined"] = r.rel_energy_combined;
    if (r.accuracy_loss) rj["accuracy_loss_pct"] = *r.accuracy_loss;
    else rj["accuracy_loss_pct"] = nullptr;
    rj["random_baseline_pct"] = r.random_baseline;
    recs.push_back(std::move(rj));
  }
  j["records"] = recs;
  return j.dump(2) + "\n";
}

std::string pgm_bytes(const std::vector<double>& values, std::uint32_t width,
                      std::uint32_t height, double range) {
  if (values.size() != std::size_t(width) * height)
    throw std::invalid_argument("pgm_bytes: size does not match dimensions");
  std::string s = "P5\n" + std::to_string(width) + " " + std::to_string(height) +
                  "\n255\n";
  s.reserve(s.size() + values.size());
  for (double v : values) {
    double scaled = v / range * 255.0;
    if (!(scaled > 0.0)) scaled = 0.0;  // negatives and NaN clamp to black
    if (scaled > 255.0) scaled = 255.0;
    s += char(static_cast<unsigned char>(std::lround(scaled)));
  }
  return s;
}

std::string sanitize_technique(std::string_view technique) {
  std::string out;
  out.reserve(technique.size());
  for (char c : technique) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

} // namespace aisc
