#include "aisc/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aisc/interp.hpp"
#include "aisc/rng.hpp"

namespace aisc {

namespace {

std::string dir_from(const char* env_name, const char* baked) {
  if (const char* env = std::getenv(env_name); env && *env) return env;
  return baked;
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const DataRegion& need_region(const Program& prog, const std::string& name) {
  const DataRegion* r = prog.find_region(name);
  if (!r) throw std::runtime_error("kernel has no data region '" + name + "'");
  return *r;
}

void store_fp(std::vector<std::uint64_t>& image, const DataRegion& r,
              std::uint64_t index, double value) {
  image.at(r.base + index) = std::bit_cast<std::uint64_t>(value);
}

// 64 2-D points drawn uniformly from [0,10)^2, interleaved x,y.
void gen_kmeans(const Program& prog, std::vector<std::uint64_t>& image,
                SplitMix64& rng) {
  const DataRegion& points = need_region(prog, "points");
  for (std::uint64_t i = 0; i < points.size; ++i)
    store_fp(image, points, i, rng.next_in(0.0, 10.0));
}

// Symmetric 8x8 matrix with entries in [-1,1); the upper triangle is
// drawn row-major and mirrored.
void gen_power_iter(const Program& prog, std::vector<std::uint64_t>& image,
                    SplitMix64& rng) {
  const DataRegion& mat = need_region(prog, "mat");
  for (std::uint64_t i = 0; i < 8; ++i)
    for (std::uint64_t j = i; j < 8; ++j) {
      double v = rng.next_in(-1.0, 1.0);
      store_fp(image, mat, i * 8 + j, v);
      store_fp(image, mat, j * 8 + i, v);
    }
}

// 32 radicands drawn uniformly from [0.5,100).
void gen_newton_sqrt(const Program& prog, std::vector<std::uint64_t>& image,
                     SplitMix64& rng) {
  const DataRegion& xs = need_region(prog, "xs");
  for (std::uint64_t i = 0; i < xs.size; ++i)
    store_fp(image, xs, i, rng.next_in(0.5, 100.0));
}

// A random 16x16 scene in [0,256) is smoothed by two wrap-around 3x3 box
// blurs, then observed as four 8x8 frames of 2x2 block means at pixel
// shifts (0,0) (0,1) (1,0) (1,1) -- the model the kernel inverts.
void gen_srr_mini(const Program& prog, std::vector<std::uint64_t>& image,
                  SplitMix64& rng) {
  const DataRegion& frames = need_region(prog, "frames");
  std::array<double, 256> scene;
  for (double& v : scene) v = rng.next_in(0.0, 256.0);
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, 256> src = scene;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            s += src[std::size_t(((y + dy) & 15) * 16 + ((x + dx) & 15))];
        scene[std::size_t(y * 16 + x)] = s / 9.0;
      }
  }
  static constexpr int kShifts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int f = 0; f < 4; ++f) {
    int sy = kShifts[f][0], sx = kShifts[f][1];
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        int y0 = (2 * y + sy) & 15, y1 = (2 * y + sy + 1) & 15;
        int x0 = (2 * x + sx) & 15, x1 = (2 * x + sx + 1) & 15;
        double sum = ((scene[std::size_t(y0 * 16 + x0)] +
                       scene[std::size_t(y0 * 16 + x1)]) +
                      scene[std::size_t(y1 * 16 + x0)]) +
                     scene[std::size_t(y1 * 16 + x1)];
        store_fp(image, frames, std::uint64_t(f * 64 + y * 8 + x), sum / 4.0);
      }
  }
}

} // namespace

std::string default_kernel_dir() {
  return dir_from("AISC_KERNEL_DIR", AISC_KERNEL_DIR);
}

std::string default_profile_dir() {
  return dir_from("AISC_PROFILE_DIR", AISC_PROFILE_DIR);
}

std::vector<std::string> list_kernels(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".spec")
      names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

KernelSpec parse_kernel_spec(const std::string& text) {
  KernelSpec spec;
  bool saw_metric = false;
  std::string shape = "vector";
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("kernel spec line " + std::to_string(line_no) +
                               ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "name") spec.name = value;
      else if (key == "metric") { spec.metric = parse_metric(value); saw_metric = true; }
      else if (key == "output") spec.output = value;
      else if (key == "shape") shape = value;
      else if (key == "width") spec.width = std::uint32_t(std::stoul(value));
      else if (key == "height") spec.height = std::uint32_t(std::stoul(value));
      else if (key == "range") spec.range = std::stod(value);
      else if (key == "native_budget") spec.native_budget = std::stoull(value);
      else if (key == "convergence") spec.convergence = value;
      else if (key == "notes") spec.notes = value;
      else throw std::runtime_error("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("kernel spec line " + std::to_string(line_no) +
                               ": bad value for '" + key + "'");
    }
  }
  if (shape == "image") spec.image = true;
  else if (shape != "vector")
    throw std::runtime_error("kernel spec: unknown shape '" + shape + "'");
  if (spec.name.empty()) throw std::runtime_error("kernel spec missing name=");
  if (!saw_metric) throw std::runtime_error("kernel spec missing metric=");
  if (spec.output.empty()) throw std::runtime_error("kernel spec missing output=");
  if (!(spec.range > 0.0)) throw std::runtime_error("kernel spec: range must be positive");
  if (spec.image && (spec.width == 0 || spec.height == 0))
    throw std::runtime_error("kernel spec: image shape needs width and height");
  return spec;
}

KernelSpec load_kernel(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::path side = fs::path(dir) / (name + ".spec");
  std::ifstream in(side, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + side.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  KernelSpec spec = parse_kernel_spec(ss.str());
  if (spec.name != name)
    throw std::runtime_error(side.string() + ": name '" + spec.name +
                             "' does not match file name");
  spec.source_path = (fs::path(dir) / (name + ".asm")).string();
  return spec;
}

Program load_kernel_program(const KernelSpec& spec) {
  return assemble_file(spec.source_path);
}

std::vector<std::uint64_t> generate_input(const KernelSpec& spec,
                                          const Program& prog,
                                          std::uint64_t seed) {
  std::vector<std::uint64_t> image = prog.initial_image();
  SplitMix64 rng(seed);
  if (spec.name == "kmeans") gen_kmeans(prog, image, rng);
  else if (spec.name == "power_iter") gen_power_iter(prog, image, rng);
  else if (spec.name == "newton_sqrt") gen_newton_sqrt(prog, image, rng);
  else if (spec.name == "srr_mini") gen_srr_mini(prog, image, rng);
  else throw std::runtime_error("no input generator for kernel '" + spec.name + "'");
  return image;
}

std::vector<std::uint64_t> generate_input(const KernelSpec& spec,
                                          std::uint64_t seed) {
  return generate_input(spec, load_kernel_program(spec), seed);
}

std::vector<double> reference_output(const KernelSpec& spec,
                                     const Program& prog,
                                     const std::vector<std::uint64_t>& image) {
  std::uint64_t budget = spec.native_budget ? spec.native_budget : kFallbackBudget;
  RunResult res = run(prog, image, ExecHooks{}, budget);
  if (res.status == RunStatus::Trap)
    throw std::runtime_error("kernel '" + spec.name + "' trapped: " + res.trap_reason);
  if (res.status == RunStatus::BudgetExceeded)
    throw std::runtime_error("kernel '" + spec.name + "' exceeded its native budget");
  const DataRegion& out = need_region(prog, spec.output);
  return read_output(res.final_state, out.base, out.size);
}

} // namespace aisc
