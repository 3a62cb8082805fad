#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "vrim/bounds.hpp"
#include "vrim/core/distributions.hpp"
#include "vrim/experiments.hpp"

using namespace vrim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_oned(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::oned_gauss;
  cfg.seed = 99;
  cfg.replicas = 4;
  cfg.n = 500;
  cfg.sigma2_grid = {1.5};
  cfg.out_dir = out;
  finalize_config(cfg);
  return cfg;
}

}  // namespace

TEST_CASE("reports are byte-identical across thread counts and reruns") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "vrim_harness";
  fs::remove_all(base);

  ExperimentConfig one = tiny_oned(base / "t1");
  one.threads = 1;
  run_experiment(one);

  ExperimentConfig eight = tiny_oned(base / "t8");
  eight.threads = 8;
  run_experiment(eight);

  ExperimentConfig again = tiny_oned(base / "t8b");
  again.threads = 8;
  run_experiment(again);

  const std::string s1 = slurp(base / "t1" / "summary.csv");
  CHECK(!s1.empty());
  CHECK(s1 == slurp(base / "t8" / "summary.csv"));
  CHECK(s1 == slurp(base / "t8b" / "summary.csv"));
  CHECK(slurp(base / "t1" / "replicas.jsonl") ==
        slurp(base / "t8" / "replicas.jsonl"));
  fs::remove_all(base);
}

TEST_CASE("q = pi grid point reports the infinity sentinel for the VRF") {
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "vrim_ideal";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_oned(out);
  cfg.sigma2_grid = {1.0};
  run_experiment(cfg);

  const std::string summary = slurp(out / "summary.csv");
  bool found_inf = false;
  std::stringstream ss(summary);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.find(",IMCV,") != std::string::npos)
      found_inf = found_inf || line.find(",inf,") != std::string::npos;
  }
  CHECK(found_inf);
  fs::remove_all(out);
}

TEST_CASE("config validation catches the spec'd invariants") {
  {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::oned_gauss;
    cfg.replicas = 1;
    CHECK_THROWS_AS(finalize_config(cfg), ConfigError);
  }
  {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::gauss_d;
    cfg.mode = "during";
    cfg.n = 999;  // not l * B
    cfg.n_batches = 10;
    cfg.batch_size = 50;
    CHECK_THROWS_AS(finalize_config(cfg), ConfigError);
  }
  {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::logreg;
    cfg.mode = "sometimes";
    CHECK_THROWS_AS(finalize_config(cfg), ConfigError);
  }
}

TEST_CASE("config files parse, reject unknown keys and bad values") {
  namespace fs = std::filesystem;
  const fs::path file = fs::temp_directory_path() / "vrim_cfg.txt";
  {
    std::ofstream out(file);
    out << "# comment\n"
        << "seed = 123\n"
        << "replicas = 8\n"
        << "sigma2_grid = 1.1, 2.0\n"
        << "mode = during\n";
  }
  ExperimentConfig cfg;
  apply_config_file(cfg, file);
  CHECK(cfg.seed == 123);
  CHECK(cfg.replicas == 8);
  CHECK(cfg.sigma2_grid == std::vector<double>{1.1, 2.0});
  CHECK(cfg.mode == "during");

  {
    std::ofstream out(file);
    out << "not_a_key = 3\n";
  }
  CHECK_THROWS_AS(apply_config_file(cfg, file), ConfigError);
  {
    std::ofstream out(file);
    out << "replicas = soon\n";
  }
  CHECK_THROWS_AS(apply_config_file(cfg, file), ConfigError);
  fs::remove(file);
}

TEST_CASE("gaussian bound: zero at the target, positive and finite nearby") {
  const BoundResult at_one = bound_1d_gaussian(1.0, 1e-7);
  CHECK(at_one.bound == 0.0);
  CHECK(std::isinf(at_one.log10_vrf_lower));

  const BoundResult b = bound_1d_gaussian(1.5, 1e-7);
  CHECK(b.bound > 0.0);
  CHECK(std::isfinite(b.bound));
  CHECK(b.log10_vrf_lower == doctest::Approx(-std::log10(b.bound)));
}

TEST_CASE("gaussian bound quadrature matches its Monte Carlo oracle") {
  for (double s2 : {1.2, 1.5, 2.5}) {
    const BoundResult quad = bound_1d_gaussian(s2, 1e-7);
    RngStream rng(71, static_cast<std::uint64_t>(10.0 * s2));
    const BoundResult mc = bound_1d_gaussian_mc(s2, 10000000, rng);
    CHECK(std::abs(quad.bound - mc.bound) < 3.0 * mc.se);
  }
}

TEST_CASE("gaussian bound is continuous through the target") {
  const double lo = bound_1d_gaussian(0.99, 1e-9).bound;
  const double hi = bound_1d_gaussian(1.01, 1e-9).bound;
  CHECK(lo > 0.0);
  CHECK(hi > 0.0);
  CHECK(std::abs(lo - hi) < 0.1 * std::max(lo, hi));
}

TEST_CASE("student-t weight supremum matches a grid maximisation") {
  for (double nu : {1.0, 3.0, 7.0}) {
    double best = 0.0;
    for (int i = 0; i <= 40000; ++i) {
      const double x = -4.0 + 8.0 * i / 40000.0;
      const double w = std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * M_PI) -
                                studentt_logpdf(x, nu));
      best = std::max(best, w);
    }
    CHECK(student_t_wstar(nu) == doctest::Approx(best).epsilon(1e-6));
  }
  CHECK(student_t_wstar(1.0) ==
        doctest::Approx(std::sqrt(M_PI / 2.0) * 2.0 * std::exp(-0.5)));
}

TEST_CASE("student-t bound: positivity and decreasing trend in nu") {
  double previous = std::numeric_limits<double>::infinity();
  for (double nu : {5.0, 10.0, 20.0, 50.0}) {
    RngStream rng(72, static_cast<std::uint64_t>(nu));
    const BoundResult b = bound_1d_student_t(nu, 1000000, rng);
    CHECK(b.bound >= 0.0);
    CHECK(b.se > 0.0);
    CHECK(b.bound < previous + 3.0 * b.se);
    previous = b.bound;
  }
  RngStream rng(72, 99);
  CHECK_THROWS_AS(bound_1d_student_t(2.0, 100, rng), NumericalError);
}

TEST_CASE("bounds experiment writes the curve table") {
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "vrim_bounds";
  fs::remove_all(out);
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::bounds;
  cfg.sigma2_grid = {1.5};
  cfg.nu_grid = {5.0};
  cfg.bound_mc = 20000;
  cfg.bound_tol = 1e-6;
  cfg.out_dir = out;
  finalize_config(cfg);
  run_experiment(cfg);
  const std::string table = slurp(out / "bounds.csv");
  CHECK(table.find("gaussian,1.5") != std::string::npos);
  CHECK(table.find("student-t,5") != std::string::npos);
  fs::remove_all(out);
}
