#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "aisc/interp.hpp"
#include "aisc/kernels.hpp"
#include "aisc/models.hpp"
#include "aisc/rng.hpp"
#include "aisc/transforms.hpp"
#include "oracles.hpp"

using namespace aisc;

namespace {

double max_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    double denom = std::fabs(want[i]);
    double err = std::fabs(got[i] - want[i]) / (denom > 0.0 ? denom : 1.0);
    worst = std::max(worst, err);
  }
  return worst;
}

} // namespace

TEST_CASE("the kernel directory ships exactly the documented kernels") {
  std::vector<std::string> names = list_kernels(default_kernel_dir());
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "kmeans");
  CHECK(names[1] == "newton_sqrt");
  CHECK(names[2] == "power_iter");
  CHECK(names[3] == "srr_mini");
}

TEST_CASE("sidecar metadata is consistent with each program") {
  struct Expect {
    const char* name;
    Metric metric;
    const char* output;
    std::uint64_t out_size;
    bool image;
  };
  const Expect expects[] = {
      {"kmeans", Metric::MismatchRate, "out_assign", 64, false},
      {"newton_sqrt", Metric::RelL2, "out", 32, false},
      {"power_iter", Metric::RelL2, "vec", 8, false},
      {"srr_mini", Metric::SSIM, "hr", 256, true},
  };
  for (const Expect& e : expects) {
    KernelSpec spec = load_kernel(default_kernel_dir(), e.name);
    CHECK(spec.name == e.name);
    CHECK(spec.metric == e.metric);
    CHECK(spec.output == e.output);
    CHECK(spec.image == e.image);
    CHECK(spec.range > 0.0);
    if (e.image) {
      CHECK(spec.width == 16);
      CHECK(spec.height == 16);
    }
    Program prog = load_kernel_program(spec);
    const DataRegion* out = prog.find_region(spec.output);
    REQUIRE(out);
    CHECK(out->size == e.out_size);
  }
}

TEST_CASE("every kernel exercises multiplication and division") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    Program p = load_kernel_program(load_kernel(default_kernel_dir(), name));
    int divs = 0, muls = 0;
    for (const Instruction& ins : p.instructions) {
      if (ins.op == Opcode::FDIV) ++divs;
      if (ins.op == Opcode::FMUL) ++muls;
    }
    CAPTURE(name);
    CHECK(divs >= 1);
    CHECK(muls >= 1);
  }
}

TEST_CASE("input generation is deterministic and in range") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    KernelSpec spec = load_kernel(default_kernel_dir(), name);
    Program prog = load_kernel_program(spec);
    auto a = generate_input(spec, prog, 7);
    auto b = generate_input(spec, prog, 7);
    auto c = generate_input(spec, prog, 8);
    CHECK(a == b);
    CHECK(a != c);
  }

  KernelSpec newton = load_kernel(default_kernel_dir(), "newton_sqrt");
  Program nprog = load_kernel_program(newton);
  auto nimage = generate_input(newton, nprog, 7);
  for (double x : oracle::region_values(nprog, nimage, "xs")) {
    CHECK(x >= 0.5);
    CHECK(x < 100.0);
  }

  KernelSpec km = load_kernel(default_kernel_dir(), "kmeans");
  Program kprog = load_kernel_program(km);
  auto kimage = generate_input(km, kprog, 7);
  for (double x : oracle::region_values(kprog, kimage, "points")) {
    CHECK(x >= 0.0);
    CHECK(x < 10.0);
  }

  KernelSpec pw = load_kernel(default_kernel_dir(), "power_iter");
  Program pprog = load_kernel_program(pw);
  auto pimage = generate_input(pw, pprog, 7);
  auto mat = oracle::region_values(pprog, pimage, "mat");
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(mat[std::size_t(i * 8 + j)] == mat[std::size_t(j * 8 + i)]);
      CHECK(mat[std::size_t(i * 8 + j)] >= -1.0);
      CHECK(mat[std::size_t(i * 8 + j)] < 1.0);
    }
  // the initial eigenvector estimate from .init survives input generation
  CHECK(oracle::region_values(pprog, pimage, "vec")[0] == 1.0);

  KernelSpec srr = load_kernel(default_kernel_dir(), "srr_mini");
  Program sprog = load_kernel_program(srr);
  auto simage = generate_input(srr, sprog, 7);
  for (double x : oracle::region_values(sprog, simage, "frames")) {
    CHECK(x >= 0.0);
    CHECK(x < 256.0);
  }
  // the estimate region starts cleared; the kernel builds it
  for (double x : oracle::region_values(sprog, simage, "hr")) CHECK(x == 0.0);
}

TEST_CASE("interpreter output matches the host oracle on every kernel") {
  struct Tol {
    const char* name;
    double rel;
  };
  const Tol tols[] = {
      {"newton_sqrt", 1e-12},
      {"kmeans", 0.0},
      {"power_iter", 1e-9},
      {"srr_mini", 1e-9},
  };
  for (const Tol& t : tols) {
    KernelSpec spec = load_kernel(default_kernel_dir(), t.name);
    Program prog = load_kernel_program(spec);
    std::uint64_t seed = derive_seed(42, spec.name);
    auto image = generate_input(spec, prog, seed);
    std::vector<double> got = reference_output(spec, prog, image);
    std::vector<double> want = oracle::run_kernel(t.name, prog, image);
    CAPTURE(t.name);
    REQUIRE(got.size() == want.size());
    if (t.rel == 0.0) {
      CHECK(mismatch_rate(got, want) == 0.0);
    } else {
      CHECK(max_rel_err(got, want) <= t.rel);
    }
  }
}

TEST_CASE("oracle agreement holds across seeds") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    KernelSpec spec = load_kernel(default_kernel_dir(), name);
    Program prog = load_kernel_program(spec);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      auto image = generate_input(spec, prog, seed);
      std::vector<double> got = reference_output(spec, prog, image);
      std::vector<double> want = oracle::run_kernel(name, prog, image);
      CAPTURE(name);
      CAPTURE(seed);
      CHECK(max_rel_err(got, want) <= 1e-9);
    }
  }
}

TEST_CASE("pinned native budgets hold at the default seed and others") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    KernelSpec spec = load_kernel(default_kernel_dir(), name);
    Program prog = load_kernel_program(spec);
    CAPTURE(name);
    REQUIRE(spec.native_budget > 0);
    for (std::uint64_t base : {42ull, 1ull, 99ull}) {
      auto image = generate_input(spec, prog, derive_seed(base, spec.name));
      RunResult rr = run(prog, image, ExecHooks{}, spec.native_budget);
      CHECK(rr.status == RunStatus::Halted);
    }
  }
}

TEST_CASE("iteration caps couple the dynamic count to convergence controls") {
  // kmeans: fewer maximum passes can only shorten the run
  {
    KernelSpec spec = load_kernel(default_kernel_dir(), "kmeans");
    Program prog = load_kernel_program(spec);
    auto image = generate_input(spec, prog, derive_seed(42, spec.name));
    RunResult full = run(prog, image, {}, kFallbackBudget);
    REQUIRE(full.status == RunStatus::Halted);

    auto patched = image;
    const DataRegion* params = prog.find_region("params");
    REQUIRE(params);
    patched[params->base] = 2;  // at most two passes
    RunResult cut = run(prog, patched, {}, kFallbackBudget);
    REQUIRE(cut.status == RunStatus::Halted);
    CHECK(cut.stats.total_dynamic <= full.stats.total_dynamic);
  }
  // power_iter: a looser tolerance can only shorten the run
  {
    KernelSpec spec = load_kernel(default_kernel_dir(), "power_iter");
    Program prog = load_kernel_program(spec);
    auto image = generate_input(spec, prog, derive_seed(42, spec.name));
    RunResult tight = run(prog, image, {}, kFallbackBudget);
    REQUIRE(tight.status == RunStatus::Halted);

    auto patched = image;
    const DataRegion* consts = prog.find_region("consts");
    REQUIRE(consts);
    patched[consts->base] = std::bit_cast<std::uint64_t>(1e-4);
    RunResult loose = run(prog, patched, {}, kFallbackBudget);
    REQUIRE(loose.status == RunStatus::Halted);
    CHECK(loose.stats.total_dynamic < tight.stats.total_dynamic);
  }
}

TEST_CASE("width reduction leaves every kernel able to halt") {
  for (const std::string& name : list_kernels(default_kernel_dir())) {
    KernelSpec spec = load_kernel(default_kernel_dir(), name);
    Program prog = load_kernel_program(spec);
    auto image = generate_input(spec, prog, derive_seed(42, spec.name));
    TransformOutcome sp = make_technique(prog, parse_technique("dptosp"));
    RunResult rr = run(prog, image, sp.hooks, kFallbackBudget);
    CAPTURE(name);
    CHECK(rr.status == RunStatus::Halted);
  }
}

TEST_CASE("kernel spec parsing validates its fields") {
  CHECK_THROWS(parse_kernel_spec("metric = rel-L2\noutput = out\nrange = 1\n"));
  CHECK_THROWS(parse_kernel_spec("name = x\noutput = out\nrange = 1\n"));
  CHECK_THROWS(parse_kernel_spec("name = x\nmetric = rel-L2\nrange = 1\n"));
  CHECK_THROWS(parse_kernel_spec(
      "name = x\nmetric = rel-L2\noutput = out\nrange = -2\n"));
  CHECK_THROWS(parse_kernel_spec(
      "name = x\nmetric = rel-L2\noutput = out\nrange = 1\nshape = blob\n"));
  CHECK_THROWS(parse_kernel_spec(
      "name = x\nmetric = rel-L2\noutput = out\nrange = 1\nshape = image\n"));
  CHECK_THROWS(parse_kernel_spec(
      "name = x\nmetric = rel-L2\noutput = out\nrange = 1\ncolour = green\n"));
  CHECK_THROWS(parse_kernel_spec(
      "name = x\nmetric = psnr\noutput = out\nrange = 1\n"));

  KernelSpec ok = parse_kernel_spec(
      "name = x\nmetric = SSIM\noutput = out\nrange = 8\n"
      "shape = image\nwidth = 4\nheight = 2\nnative_budget = 99\n"
      "convergence = fixed\nnotes = none\n");
  CHECK(ok.name == "x");
  CHECK(ok.image);
  CHECK(ok.width == 4);
  CHECK(ok.height == 2);
  CHECK(ok.range == 8.0);
  CHECK(ok.native_budget == 99);
}

TEST_CASE("load_kernel rejects a sidecar whose name disagrees") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "aisc_spec_mismatch";
  fs::create_directories(dir);
  std::ofstream(dir / "alpha.spec")
      << "name = beta\nmetric = rel-L2\noutput = out\nrange = 1\n";
  CHECK_THROWS(load_kernel(dir.string(), "alpha"));
  fs::remove_all(dir);
}
