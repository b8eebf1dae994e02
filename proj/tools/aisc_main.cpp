// aisc: run kernel x technique experiments, inspect kernels, lower for
// engine profiles, and export image outputs.

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aisc/harness.hpp"
#include "aisc/interp.hpp"
#include "aisc/kernels.hpp"
#include "aisc/rng.hpp"
#include "aisc/transforms.hpp"

namespace {

using namespace aisc;

std::vector<std::string> resolve_kernels(const std::vector<std::string>& args,
                                         const std::string& dir) {
  if (args.empty() ||
      std::find(args.begin(), args.end(), "all") != args.end())
    return list_kernels(dir);
  return args;
}

std::vector<Technique> resolve_techniques(const std::vector<std::string>& args,
                                          bool drop_sweep) {
  if (args.empty() ||
      std::find(args.begin(), args.end(), "all") != args.end())
    return default_techniques(drop_sweep);
  std::vector<Technique> list;
  for (const std::string& s : args) list.push_back(parse_technique(s));
  return list;
}

int do_run(const RunConfig& cfg) {
  std::vector<ExperimentRecord> records = run_matrix(cfg);
  std::printf("%-12s %-28s %-18s %10s %10s %9s\n", "kernel", "technique",
              "status", "rel_instr", "rel_e_var", "loss%");
  for (const ExperimentRecord& r : records) {
    char loss[24] = "-";
    if (r.accuracy_loss)
      std::snprintf(loss, sizeof loss, "%.4g", *r.accuracy_loss);
    std::printf("%-12s %-28s %-18s %10.4g %10.4g %9s\n", r.kernel.c_str(),
                r.technique.c_str(), r.status.c_str(), r.rel_instr,
                r.rel_energy_var, loss);
  }
  if (!cfg.out_dir.empty())
    std::printf("wrote %s/{mix.csv,tradeoff.csv,report.json}\n",
                cfg.out_dir.c_str());
  return 0;
}

int do_list(const std::string& kernel_dir) {
  std::printf("kernels (%s):\n", kernel_dir.c_str());
  for (const std::string& name : list_kernels(kernel_dir)) {
    KernelSpec spec = load_kernel(kernel_dir, name);
    std::printf("  %-14s metric=%-14s output=%-12s native_budget=%llu\n",
                spec.name.c_str(), metric_name(spec.metric),
                spec.output.c_str(),
                static_cast<unsigned long long>(spec.native_budget));
  }
  std::printf("techniques (default matrix):\n");
  for (const Technique& t : default_techniques(false))
    std::printf("  %s\n", technique_to_string(t).c_str());
  std::printf("profiles (%s):\n", default_profile_dir().c_str());
  namespace fs = std::filesystem;
  std::vector<std::string> profiles;
  for (const auto& entry : fs::directory_iterator(default_profile_dir()))
    if (entry.is_regular_file() && entry.path().extension() == ".profile")
      profiles.push_back(entry.path().stem().string());
  std::sort(profiles.begin(), profiles.end());
  for (const std::string& p : profiles) std::printf("  %s\n", p.c_str());
  return 0;
}

std::string resolve_profile_path(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) return arg;
  fs::path named = fs::path(default_profile_dir()) / (arg + ".profile");
  if (fs::exists(named)) return named.string();
  throw std::runtime_error("no such profile: " + arg);
}

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Halted: return "halted";
    case RunStatus::BudgetExceeded: return "budget-exceeded";
    default: return "trap";
  }
}

int do_lower(const std::string& profile_arg, const std::string& kernel,
             const std::string& kernel_dir, std::uint64_t seed) {
  EngineProfile profile = parse_profile_file(resolve_profile_path(profile_arg));
  KernelSpec spec = load_kernel(kernel_dir, kernel);
  Program prog = load_kernel_program(spec);

  TransformOutcome out;
  try {
    out = lower_for_engine(prog, profile);
  } catch (const std::exception& e) {
    std::cerr << "cannot lower " << kernel << " for " << profile.name << ": "
              << e.what() << "\n";
    return 1;
  }
  std::printf("%s\n", out.notes.c_str());

  std::vector<std::uint64_t> image =
      generate_input(spec, prog, derive_seed(seed, spec.name));
  RunResult native = run(prog, image, ExecHooks{}, kFallbackBudget);
  RunResult lowered = run(out.program, image, out.hooks, kFallbackBudget);
  std::printf("native:  %-16s total_dynamic=%llu\n",
              run_status_name(native.status),
              static_cast<unsigned long long>(native.stats.total_dynamic));
  std::printf("lowered: %-16s total_dynamic=%llu dropped=%llu\n",
              run_status_name(lowered.status),
              static_cast<unsigned long long>(lowered.stats.total_dynamic),
              static_cast<unsigned long long>(lowered.stats.dropped_dynamic));

  if (native.status == RunStatus::Halted &&
      lowered.status == RunStatus::Halted) {
    const DataRegion* reg = prog.find_region(spec.output);
    auto a = read_output(native.final_state, reg->base, reg->size);
    auto b = read_output(lowered.final_state, reg->base, reg->size);
    bool identical = a.size() == b.size();
    for (std::size_t i = 0; identical && i < a.size(); ++i)
      identical = std::bit_cast<std::uint64_t>(a[i]) ==
                  std::bit_cast<std::uint64_t>(b[i]);
    std::printf("outputs bit-identical: %s\n", identical ? "yes" : "no");
  }
  return 0;
}

int do_image(const std::string& record_id, const std::string& out_path,
             RunConfig cfg) {
  std::size_t colon = record_id.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("record id must look like <kernel>:<technique>");
  std::string kernel = record_id.substr(0, colon);
  Technique tech = parse_technique(record_id.substr(colon + 1));

  std::string kdir = cfg.kernel_dir.empty() ? default_kernel_dir() : cfg.kernel_dir;
  KernelSpec spec = load_kernel(kdir, kernel);
  if (!spec.image)
    throw std::runtime_error("kernel '" + kernel + "' does not produce an image");
  KernelContext ctx = prepare_kernel(spec, cfg);
  ExperimentRecord rec = run_experiment(ctx, tech, cfg);
  if (rec.status != "ok")
    throw std::runtime_error("record " + record_id + " has status " + rec.status +
                             "; no image output");
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out_path);
  file << pgm_bytes(rec.output, spec.width, spec.height, spec.range);
  std::printf("wrote %s (%ux%u)\n", out_path.c_str(), spec.width, spec.height);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"approximate instruction-set subsetting workbench"};
  app.require_subcommand(1);

  std::vector<std::string> kernel_args;
  std::vector<std::string> technique_args;
  std::string epi_path;
  std::string kernel_dir;
  std::string out_dir = "out";
  std::string profile_arg;
  std::string record_id;
  std::string image_out = "record.pgm";
  std::uint64_t seed = 42;
  double fixed_fraction = 0.75;
  double budget_mult = 100.0;
  unsigned jobs = 1;
  bool drop_sweep = false;

  CLI::App* cmd_run = app.add_subcommand("run", "run the experiment matrix");
  cmd_run->add_option("--kernel", kernel_args, "kernel name or 'all'");
  cmd_run->add_option("--technique", technique_args, "technique spec or 'all'");
  cmd_run->add_option("--seed", seed, "global seed");
  cmd_run->add_option("--epi", epi_path, "EPI table file");
  cmd_run->add_option("--fixed-fraction", fixed_fraction,
                      "fixed energy fraction in [0,1)");
  cmd_run->add_option("--budget-mult", budget_mult,
                      "cell budget as a multiple of the native count");
  cmd_run->add_option("--out", out_dir, "output directory");
  cmd_run->add_option("--jobs", jobs, "worker threads");
  cmd_run->add_flag("--drop-sweep", drop_sweep,
                    "widen the default drop grid to t<=0.10, three seeds each");
  cmd_run->add_option("--kernel-dir", kernel_dir, "kernel directory override");

  CLI::App* cmd_list =
      app.add_subcommand("list", "list kernels, techniques, and profiles");
  cmd_list->add_option("--kernel-dir", kernel_dir, "kernel directory override");

  CLI::App* cmd_lower =
      app.add_subcommand("lower", "map a kernel onto an engine profile");
  cmd_lower->add_option("--profile", profile_arg, "profile file or name")
      ->required();
  std::string lower_kernel;
  cmd_lower->add_option("--kernel", lower_kernel, "kernel name")->required();
  cmd_lower->add_option("--seed", seed, "global seed");
  cmd_lower->add_option("--kernel-dir", kernel_dir, "kernel directory override");

  CLI::App* cmd_image =
      app.add_subcommand("image", "export one record's output as a PGM");
  cmd_image->add_option("--record", record_id, "record id <kernel>:<technique>")
      ->required();
  cmd_image->add_option("--out", image_out, "output file");
  cmd_image->add_option("--seed", seed, "global seed");
  cmd_image->add_option("--epi", epi_path, "EPI table file");
  cmd_image->add_option("--fixed-fraction", fixed_fraction,
                        "fixed energy fraction in [0,1)");
  cmd_image->add_option("--budget-mult", budget_mult,
                        "cell budget as a multiple of the native count");
  cmd_image->add_option("--kernel-dir", kernel_dir, "kernel directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.fixed_fraction = fixed_fraction;
    cfg.budget_mult = budget_mult;
    cfg.kernel_dir = kernel_dir;
    cfg.jobs = jobs;
    if (!epi_path.empty()) cfg.epi = parse_epi_file(epi_path);

    if (cmd_run->parsed()) {
      std::string kdir = kernel_dir.empty() ? default_kernel_dir() : kernel_dir;
      cfg.kernels = resolve_kernels(kernel_args, kdir);
      cfg.techniques = resolve_techniques(technique_args, drop_sweep);
      cfg.out_dir = out_dir;
      return do_run(cfg);
    }
    if (cmd_list->parsed())
      return do_list(kernel_dir.empty() ? default_kernel_dir() : kernel_dir);
    if (cmd_lower->parsed())
      return do_lower(profile_arg, lower_kernel,
                      kernel_dir.empty() ? default_kernel_dir() : kernel_dir,
                      seed);
    if (cmd_image->parsed()) return do_image(record_id, image_out, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
