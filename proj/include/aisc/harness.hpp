#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aisc/interp.hpp"
#include "aisc/kernels.hpp"
#include "aisc/models.hpp"
#include "aisc/transforms.hpp"

namespace aisc {

/// Experiment-matrix configuration. Seeds for unseeded drop techniques and
/// for input generation are derived per kernel from `seed`, so cells are
/// independent streams.
struct RunConfig {
  std::vector<std::string> kernels;
  std::vector<Technique> techniques;
  std::uint64_t seed = 42;
  EpiTable epi;
  double fixed_fraction = 0.75;
  double budget_mult = 100.0;  // cell budget = native total * budget_mult
  std::string kernel_dir;      // empty = default_kernel_dir()
  std::string out_dir;         // empty = write no files
  unsigned jobs = 1;
};

/// The default technique list: native, the three width reductions that
/// apply to binary64 kernels, dropdiv, drop at t in {0.01, 0.04, 0.07},
/// multoadd and both divtomul variants. `drop_sweep` replaces the drop
/// entries with t in {0.01, 0.04, 0.07, 0.10}, three replicates each.
std::vector<Technique> default_techniques(bool drop_sweep);

/// One cell of the experiment matrix.
struct ExperimentRecord {
  std::string kernel;
  std::string technique;  // canonical string with resolved seed
  std::string metric;
  // ok | budget-exceeded | trap | cap-exceeded | infeasible-energy
  std::string status;
  std::string trap_reason;  // set iff status == trap
  std::uint64_t input_seed = 0;
  RunStats stats;
  double rel_instr = 0.0;
  double rel_energy_var = 0.0;
  double rel_energy_combined = 0.0;
  std::optional<double> accuracy_loss;  // ok records only
  double random_baseline = 0.0;
  std::vector<double> output;  // declared output region, ok records only
};

/// Per-kernel state shared by every cell: program, seeded input image,
/// native run, reference output, and the derived budget.
struct KernelContext {
  KernelSpec spec;
  Program prog;
  std::uint64_t input_seed = 0;
  std::vector<std::uint64_t> image;
  RunStats native_stats;
  double native_energy = 0.0;
  std::vector<double> reference;
  double baseline = 0.0;
  std::uint64_t budget = 0;
};

/// Assembles, generates input, runs natively, and derives the cell budget.
/// Throws if the native run does not halt.
KernelContext prepare_kernel(const KernelSpec& spec, const RunConfig& cfg);

/// Runs one (kernel, technique) cell. An unseeded drop technique gets the
/// replicate-0 derived seed. Never throws for run outcomes; they land in
/// `status`.
ExperimentRecord run_experiment(const KernelContext& ctx, const Technique& tech,
                                const RunConfig& cfg);

/// Runs the full matrix in configured order (parallel across cells when
/// cfg.jobs > 1, with results identical to the serial run) and, when
/// cfg.out_dir is set, writes mix.csv, tradeoff.csv, report.json, and a
/// PGM per feasible image record.
std::vector<ExperimentRecord> run_matrix(const RunConfig& cfg);

std::string mix_csv(const std::vector<ExperimentRecord>& records);
std::string tradeoff_csv(const std::vector<ExperimentRecord>& records);
std::string report_json(const std::vector<ExperimentRecord>& records,
                        const RunConfig& cfg);

/// Binary 8-bit PGM; values are scaled by 255/range and clamped.
std::string pgm_bytes(const std::vector<double>& values, std::uint32_t width,
                      std::uint32_t height, double range);

/// Technique part of a record id, safe for file names.
std::string sanitize_technique(std::string_view technique);

} // namespace aisc
