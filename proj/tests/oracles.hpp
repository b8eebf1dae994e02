#pragma once

// Host-language reimplementations of the shipped kernels, used to
// cross-check interpreter outputs. Each mirrors its kernel's exact
// floating-point operation order (the whole build uses -ffp-contract=off,
// so these run the same IEEE operation sequence the interpreter does).

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "aisc/isa.hpp"

namespace oracle {

inline std::vector<double> region_values(const aisc::Program& prog,
                                         const std::vector<std::uint64_t>& image,
                                         std::string_view name) {
  const aisc::DataRegion* r = prog.find_region(name);
  if (!r) throw std::runtime_error("oracle: no region " + std::string(name));
  std::vector<double> out(r->size);
  for (std::uint64_t i = 0; i < r->size; ++i)
    out[i] = std::bit_cast<double>(image.at(r->base + i));
  return out;
}

inline double abs_like_kernel(double v) { return v >= 0.0 ? v : 0.0 - v; }

inline std::vector<double> newton_sqrt(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    double y = x;
    for (int it = 0; it < 64; ++it) {
      double q = x / y;
      double s = q + y;
      double ynew = s * 0.5;
      double step = ynew - y;
      y = ynew;
      if (abs_like_kernel(step) < 1e-10) break;
    }
    out.push_back(y);
  }
  return out;
}

// Returns the final assignments converted to binary64, like the kernel's
// out_assign region.
inline std::vector<double> kmeans_assign(const std::vector<double>& points) {
  std::array<double, 8> cent{};
  for (int i = 0; i < 8; ++i) cent[std::size_t(i)] = points[std::size_t(i)];
  std::array<std::int64_t, 64> assign;
  assign.fill(-1);
  for (int pass = 0; pass < 50; ++pass) {
    bool changed = false;
    for (int i = 0; i < 64; ++i) {
      double px = points[std::size_t(2 * i)];
      double py = points[std::size_t(2 * i + 1)];
      double best = 0.0;
      std::int64_t bestj = 0;
      for (int j = 0; j < 4; ++j) {
        double dx = px - cent[std::size_t(2 * j)];
        double dx2 = dx * dx;
        double dy = py - cent[std::size_t(2 * j + 1)];
        double dy2 = dy * dy;
        double d = dx2 + dy2;
        if (j == 0) best = d;
        else if (!(d >= best)) { best = d; bestj = j; }
      }
      if (assign[std::size_t(i)] != bestj) {
        assign[std::size_t(i)] = bestj;
        changed = true;
      }
    }
    std::array<double, 8> sums{};
    std::array<std::int64_t, 4> counts{};
    for (int i = 0; i < 64; ++i) {
      std::int64_t j = assign[std::size_t(i)];
      sums[std::size_t(2 * j)] += points[std::size_t(2 * i)];
      sums[std::size_t(2 * j + 1)] += points[std::size_t(2 * i + 1)];
      ++counts[std::size_t(j)];
    }
    for (int j = 0; j < 4; ++j) {
      if (counts[std::size_t(j)] == 0) continue;
      double n = double(counts[std::size_t(j)]);
      cent[std::size_t(2 * j)] = sums[std::size_t(2 * j)] / n;
      cent[std::size_t(2 * j + 1)] = sums[std::size_t(2 * j + 1)] / n;
    }
    if (!changed) break;
  }
  std::vector<double> out;
  out.reserve(64);
  for (std::int64_t a : assign) out.push_back(double(a));
  return out;
}

inline std::vector<double> power_iter(const std::vector<double>& mat) {
  std::array<double, 8> v{};
  v[0] = 1.0;
  double lam_prev = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::array<double, 8> w{};
    for (int i = 0; i < 8; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 8; ++j)
        acc = acc + mat[std::size_t(i * 8 + j)] * v[std::size_t(j)];
      w[std::size_t(i)] = acc;
    }
    double vw = 0.0, vv = 0.0;
    for (int i = 0; i < 8; ++i) {
      vw = vw + v[std::size_t(i)] * w[std::size_t(i)];
      vv = vv + v[std::size_t(i)] * v[std::size_t(i)];
    }
    double lam = vw / vv;
    double m = 0.0;
    for (int i = 0; i < 8; ++i) {
      double a = abs_like_kernel(w[std::size_t(i)]);
      if (!(m >= a)) m = a;
    }
    for (int i = 0; i < 8; ++i) v[std::size_t(i)] = w[std::size_t(i)] / m;
    double diff = abs_like_kernel(lam - lam_prev);
    lam_prev = lam;
    if (diff < 1e-8) break;
  }
  return {v.begin(), v.end()};
}

inline std::vector<double> srr_mini(const std::vector<double>& frames) {
  std::array<double, 256> hr;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      hr[std::size_t(y * 16 + x)] = frames[std::size_t((y >> 1) * 8 + (x >> 1))];
  static constexpr int kShifts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int it = 0; it < 20; ++it)
    for (int f = 0; f < 4; ++f) {
      int sy = kShifts[f][0], sx = kShifts[f][1];
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          int y0 = (2 * y + sy) & 15, y1 = (2 * y + sy + 1) & 15;
          int x0 = (2 * x + sx) & 15, x1 = (2 * x + sx + 1) & 15;
          std::size_t t00 = std::size_t(y0 * 16 + x0);
          std::size_t t01 = std::size_t(y0 * 16 + x1);
          std::size_t t10 = std::size_t(y1 * 16 + x0);
          std::size_t t11 = std::size_t(y1 * 16 + x1);
          double sum = ((hr[t00] + hr[t01]) + hr[t10]) + hr[t11];
          double sim = sum / 4.0;
          double err = frames[std::size_t(f * 64 + y * 8 + x)] - sim;
          double corr = err * 0.25;
          hr[t00] = hr[t00] + corr;
          hr[t01] = hr[t01] + corr;
          hr[t10] = hr[t10] + corr;
          hr[t11] = hr[t11] + corr;
        }
    }
  return {hr.begin(), hr.end()};
}

// Dispatch by kernel name over the kernel's input region.
inline std::vector<double> run_kernel(std::string_view name,
                                      const aisc::Program& prog,
                                      const std::vector<std::uint64_t>& image) {
  if (name == "newton_sqrt") return newton_sqrt(region_values(prog, image, "xs"));
  if (name == "kmeans") return kmeans_assign(region_values(prog, image, "points"));
  if (name == "power_iter") return power_iter(region_values(prog, image, "mat"));
  if (name == "srr_mini") return srr_mini(region_values(prog, image, "frames"));
  throw std::runtime_error("oracle: unknown kernel " + std::string(name));
}

} // namespace oracle
