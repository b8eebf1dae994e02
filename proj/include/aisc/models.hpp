#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aisc/interp.hpp"
#include "aisc/isa.hpp"

namespace aisc {

// Energy per instruction by category. The default halves/doubles the FP32
// cost per width step and prices Integer and Critical like FP32.
struct EpiTable {
  std::array<double, kCategoryCount> epi{1.0, 1.0, 2.0, 1.0, 0.5};

  double operator[](Category c) const { return epi[int(c)]; }

  // Requires positive entries and EPI(FP16) < EPI(FP32) < EPI(FP64).
  void validate() const;
};

EpiTable parse_epi(std::string_view text);
EpiTable parse_epi_file(const std::string& path);

// Sum over categories of (executed + emulation-extra) counts times EPI.
double energy(const RunStats& stats, const EpiTable& table);

// Total relative energy including the fixed component: f + (1-f) * rel_var.
double combined_relative(double rel_var, double fixed_fraction);

enum class Metric : std::uint8_t { RelL2, SSIM, MismatchRate };

const char* metric_name(Metric m);
Metric parse_metric(std::string_view s);

// 100 * ||out - ref||2 / ||ref||2, clamped to 100.
double rel_l2_loss(const std::vector<double>& out, const std::vector<double>& ref);

// Global structural similarity with K1 = 0.01, K2 = 0.03 over dynamic
// range L; population statistics (divide by N).
double ssim(const std::vector<double>& a, const std::vector<double>& b,
            int width, int height, double range);

// Percentage of positions whose labels differ.
double mismatch_rate(const std::vector<double>& out, const std::vector<double>& ref);

// Loss in [0, 100] for `out` against `ref` under the kernel's metric.
// `range` is the declared output range; `width`/`height` apply to SSIM.
double accuracy_loss(const std::vector<double>& out, const std::vector<double>& ref,
                     Metric metric, double range, int width, int height);

// Seed for the documented worst-case baseline (uniform random output).
inline constexpr std::uint64_t kBaselineSeed = 0xBA5E11AE;

// Loss of a seeded uniform random output over [0, range) against ref;
// MismatchRate draws integer labels in [0, range).
double random_baseline(const std::vector<double>& ref, Metric metric,
                       std::uint64_t seed, double range, int width, int height);

} // namespace aisc
