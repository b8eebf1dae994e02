#include "aisc/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aisc/rng.hpp"

namespace aisc {

void EpiTable::validate() const {
  for (int c = 0; c < kCategoryCount; ++c)
    if (!(epi[c] > 0.0))
      throw std::invalid_argument(std::string("EPI for ") +
                                  category_name(Category(c)) + " must be positive");
  if (!((*this)[Category::FP16] < (*this)[Category::FP32] &&
        (*this)[Category::FP32] < (*this)[Category::FP64]))
    throw std::invalid_argument("EPI must order FP16 < FP32 < FP64");
}

EpiTable parse_epi(std::string_view text) {
  EpiTable t;
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
      throw std::invalid_argument("EPI line " + std::to_string(line_no) +
                                  ": expected key=value");
    auto trim = [](std::string_view v) {
      std::size_t b = v.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string();
      std::size_t e2 = v.find_last_not_of(" \t");
      return std::string(v.substr(b, e2 - b + 1));
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
      throw std::invalid_argument("EPI line " + std::to_string(line_no) +
                                  ": bad value '" + value + "'");

    if (key == "fp64") t.epi[int(Category::FP64)] = v;
    else if (key == "fp32") t.epi[int(Category::FP32)] = v;
    else if (key == "fp16") t.epi[int(Category::FP16)] = v;
    else if (key == "int") t.epi[int(Category::Integer)] = v;
    else if (key == "critical") t.epi[int(Category::Critical)] = v;
    else
      throw std::invalid_argument("EPI line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
  }
  t.validate();
  return t;
}

EpiTable parse_epi_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_epi(ss.str());
}

double energy(const RunStats& stats, const EpiTable& table) {
  double total = 0.0;
  for (int c = 0; c < kCategoryCount; ++c)
    total += double(stats.dynamic_counts[c] + stats.emulation_extra[c]) * table.epi[c];
  return total;
}

double combined_relative(double rel_var, double fixed_fraction) {
  if (!(fixed_fraction >= 0.0 && fixed_fraction < 1.0))
    throw std::invalid_argument("fixed fraction must be in [0,1)");
  if (!(rel_var >= 0.0)) throw std::invalid_argument("relative energy must be >= 0");
  return fixed_fraction + (1.0 - fixed_fraction) * rel_var;
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::RelL2: return "rel-L2";
    case Metric::SSIM: return "SSIM";
    case Metric::MismatchRate: return "mismatch-rate";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "rel-L2") return Metric::RelL2;
  if (s == "SSIM") return Metric::SSIM;
  if (s == "mismatch-rate") return Metric::MismatchRate;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "'");
}

double rel_l2_loss(const std::vector<double>& out, const std::vector<double>& ref) {
  if (out.size() != ref.size())
    throw std::invalid_argument("rel_l2_loss: length mismatch");
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double d = out[i] - ref[i];
    diff2 += d * d;
    ref2 += ref[i] * ref[i];
  }
  if (ref2 == 0.0) throw std::invalid_argument("rel_l2_loss: reference is all zero");
  double loss = 100.0 * std::sqrt(diff2) / std::sqrt(ref2);
  if (!(loss <= 100.0)) loss = 100.0;  // also catches NaN from a broken run
  return loss;
}

double ssim(const std::vector<double>& a, const std::vector<double>& b,
            int width, int height, double range) {
  const std::size_t n = std::size_t(width) * std::size_t(height);
  if (a.size() != n || b.size() != n)
    throw std::invalid_argument("ssim: dimension mismatch");
  if (n == 0) throw std::invalid_argument("ssim: empty image");

  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);

  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    va += da * da;
    vb += db * db;
    cov += da * db;
  }
  va /= double(n);
  vb /= double(n);
  cov /= double(n);

  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  return ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
         ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

double mismatch_rate(const std::vector<double>& out, const std::vector<double>& ref) {
  if (out.size() != ref.size())
    throw std::invalid_argument("mismatch_rate: length mismatch");
  if (ref.empty()) throw std::invalid_argument("mismatch_rate: empty reference");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (out[i] != ref[i]) ++differ;
  return 100.0 * double(differ) / double(ref.size());
}

double accuracy_loss(const std::vector<double>& out, const std::vector<double>& ref,
                     Metric metric, double range, int width, int height) {
  switch (metric) {
    case Metric::RelL2:
      return rel_l2_loss(out, ref);
    case Metric::SSIM: {
      double loss = 100.0 * (1.0 - ssim(out, ref, width, height, range));
      if (!(loss >= 0.0)) loss = 0.0;
      if (!(loss <= 100.0)) loss = 100.0;
      return loss;
    }
    case Metric::MismatchRate:
      return mismatch_rate(out, ref);
  }
  throw std::logic_error("accuracy_loss: unhandled metric");
}

double random_baseline(const std::vector<double>& ref, Metric metric,
                       std::uint64_t seed, double range, int width, int height) {
  if (ref.empty()) throw std::invalid_argument("random_baseline: empty reference");
  SplitMix64 gen(seed);
  std::vector<double> noise(ref.size());
  for (double& v : noise) {
    v = gen.next_in(0.0, range);
    if (metric == Metric::MismatchRate) v = std::floor(v);
  }
  return accuracy_loss(noise, ref, metric, range, width, height);
}

} // namespace aisc
