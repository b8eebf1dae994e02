#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aisc/isa.hpp"
#include "aisc/models.hpp"

namespace aisc {

/// Sidecar descriptor for one benchmark kernel. Parsed from
/// kernels/<name>.spec (key=value lines, '#' comments); the assembly
/// source lives next to it as kernels/<name>.asm.
struct KernelSpec {
  std::string name;
  std::string source_path;
  Metric metric = Metric::RelL2;
  std::string output;       // name of the output data region
  bool image = false;       // output shape: vector or height x width image
  std::uint32_t width = 0;  // image columns
  std::uint32_t height = 0; // image rows
  double range = 1.0;       // declared value range L of the output
  std::uint64_t native_budget = 0; // pinned native count; 0 = unpinned
  std::string convergence;
  std::string notes;
};

/// Dynamic-instruction ceiling used for native runs whose sidecar has no
/// pinned budget yet.
inline constexpr std::uint64_t kFallbackBudget = 100'000'000;

/// Kernel directory baked in at build time; the AISC_KERNEL_DIR
/// environment variable overrides it.
std::string default_kernel_dir();

/// Profile directory baked in at build time; the AISC_PROFILE_DIR
/// environment variable overrides it.
std::string default_profile_dir();

/// Names of all kernels in `dir` (files matching *.spec), sorted.
std::vector<std::string> list_kernels(const std::string& dir);

/// Parses `dir`/`name`.spec and resolves source_path.
KernelSpec load_kernel(const std::string& dir, const std::string& name);

/// Parses sidecar text; `source_path` is left empty unless resolved by
/// the caller. Throws std::runtime_error on malformed input.
KernelSpec parse_kernel_spec(const std::string& text);

/// Assembles the kernel's source file.
Program load_kernel_program(const KernelSpec& spec);

/// Fills the program's input region(s) with seeded values and returns the
/// complete initial memory image. Same (spec, seed) always yields the
/// same image. Throws for a kernel with no registered generator.
std::vector<std::uint64_t> generate_input(const KernelSpec& spec,
                                          const Program& prog,
                                          std::uint64_t seed);

/// Convenience overload that assembles the program itself.
std::vector<std::uint64_t> generate_input(const KernelSpec& spec,
                                          std::uint64_t seed);

/// Runs the kernel natively (no hooks) and returns its declared output
/// region. Throws if the run traps or exceeds the budget.
std::vector<double> reference_output(const KernelSpec& spec,
                                     const Program& prog,
                                     const std::vector<std::uint64_t>& image);

} // namespace aisc
