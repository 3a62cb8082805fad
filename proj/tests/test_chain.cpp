#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "test_util.hpp"
#include "vrim/chain.hpp"

using namespace vrim;

namespace {

TargetModel target_from_proposal(const GaussianProposal& q) {
  TargetModel t;
  t.dim = q.dim();
  t.id = "proposal-as-target";
  t.log_density = [q](const Vector& x) { return q.logpdf(x); };
  return t;
}

GaussianProposal scalar_gaussian(double mu, double sd) {
  return GaussianProposal(Vector::Constant(1, mu),
                          CholeskyFactor(Matrix::Constant(1, 1, sd)));
}

}  // namespace

TEST_CASE("acceptance probability: value, branches, errors") {
  CHECK(acceptance_prob(-1.3, -1.3, 0.2, 0.2) == 1.0);

  // target N(0,1), proposal N(0,4), x = 0, y = 1
  const double lqx = -0.5 * std::log(8.0 * M_PI);
  const double lqy = lqx - 0.125;
  CHECK(acceptance_prob(0.0, -0.5, lqx, lqy) ==
        doctest::Approx(std::exp(-0.375)).epsilon(1e-12));

  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(acceptance_prob(0.0, -0.5, 0.0, ninf) == 1.0);   // q(y) = 0
  CHECK(acceptance_prob(ninf, -0.5, 0.0, -0.2) == 1.0);  // f(x) = -inf
  CHECK(acceptance_prob(0.0, ninf, 0.0, -0.2) == 0.0);   // f(y) = -inf
  CHECK_THROWS_AS(
      acceptance_prob(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0),
      NumericalError);
}

TEST_CASE("chain with q = pi accepts everything with alpha exactly one") {
  Matrix Lm(2, 2);
  Lm << 1.3, 0.0, -0.4, 0.8;
  Vector mu(2);
  mu << 0.3, -0.2;
  const GaussianProposal q(mu, CholeskyFactor(Lm));
  const TargetModel target = target_from_proposal(q);
  RngStream rng(2, 0);
  const Trajectory traj = run_chain(target, q, 2000, 0, rng);
  REQUIRE(traj.size() == 2000);
  for (const StepRecord& r : traj.records) {
    CHECK(r.alpha == 1.0);
    CHECK(r.accepted);
  }
}

TEST_CASE("fixed seed reproduces the trajectory exactly") {
  const GaussianProposal q = scalar_gaussian(0.0, 1.5);
  const TargetModel target = std_gaussian_target(1);
  RngStream a(4, 9), b(4, 9);
  const Trajectory ta = run_chain(target, q, 1500, 10, a);
  const Trajectory tb = run_chain(target, q, 1500, 10, b);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta.records[i].x(0) == tb.records[i].x(0));
    CHECK(ta.records[i].y(0) == tb.records[i].y(0));
    CHECK(ta.records[i].alpha == tb.records[i].alpha);
    CHECK(ta.records[i].accepted == tb.records[i].accepted);
  }
  CHECK(ta.meta.burn_in == 10);
}

TEST_CASE("empirical acceptance rate matches a Monte Carlo oracle") {
  const GaussianProposal q = scalar_gaussian(0.0, 1.5);
  const TargetModel target = std_gaussian_target(1);

  // E[alpha] at stationarity, X ~ pi and Y ~ q independent.
  RngStream mc(5, 0);
  double sum = 0.0;
  const int m = 1000000;
  for (int i = 0; i < m; ++i) {
    const double x = mc.normal();
    const double y = 1.5 * mc.normal();
    sum += std::min(1.0, std::exp(-0.5 * (y * y - x * x) +
                                  0.5 * (y * y - x * x) / 2.25));
  }
  const double expected = sum / m;

  RngStream rng(5, 1);
  const Trajectory traj = run_chain(target, q, 100000, 100, rng);
  CHECK(std::abs(traj.acceptance_rate() - expected) < 0.02);
}

TEST_CASE("record chaining, alpha range and cached densities") {
  const GaussianProposal q = scalar_gaussian(0.3, 2.0);
  const TargetModel target = std_gaussian_target(1);
  RngStream rng(6, 0);
  const Trajectory traj = run_chain(target, q, 5000, 0, rng);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const StepRecord& r = traj.records[i];
    const StepRecord& next = traj.records[i + 1];
    if (r.accepted)
      CHECK(next.x(0) == r.y(0));
    else
      CHECK(next.x(0) == r.x(0));
    CHECK(r.alpha >= 0.0);
    CHECK(r.alpha <= 1.0);
    CHECK(std::abs(acceptance_prob(r.log_f_x, r.log_f_y, r.log_q_x, r.log_q_y) -
                   r.alpha) < 1e-12);
  }
}

TEST_CASE("stationarity smoke test with a wide proposal") {
  const GaussianProposal q = scalar_gaussian(0.0, 2.0);
  const TargetModel target = std_gaussian_target(1);
  RngStream rng(7, 0);
  const int n = 200000;
  const Trajectory traj = run_chain(target, q, n, 1000, rng);
  std::vector<double> xs(n), sq(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = traj.records[i].x(0);
    sq[i] = xs[i] * xs[i];
  }
  const double mean = tutil::mean(xs);
  CHECK(std::abs(mean) < 4.0 * tutil::batch_means_se(xs));
  CHECK(tutil::mean(sq) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("initialization times out when nothing can be accepted") {
  // First density call (the reference state) is benign, every later call is
  // catastrophically low, so no proposal ever wins.
  auto calls = std::make_shared<int>(0);
  TargetModel t;
  t.dim = 1;
  t.id = "stuck";
  t.stateful = true;
  t.log_density = [calls](const Vector&) {
    return (*calls)++ == 0 ? 0.0 : -1e300;
  };
  const GaussianProposal q = GaussianProposal::standard(1);
  RngStream rng(8, 0);
  CHECK_THROWS_AS(run_chain(t, q, 10, 0, rng), InitializationTimeout);
}

TEST_CASE("batched runner with a single batch matches the plain chain") {
  const TargetModel target = std_gaussian_target(2);
  const GaussianProposal q0(Vector::Ones(2), CholeskyFactor::identity(2));
  const int n = 200;  // within one proposal block of the plain runner

  AdaptationConfig cfg;
  cfg.batch_size = n;
  cfg.n_batches = 1;
  cfg.burn_in_batches = 0;
  RngStream a(9, 0), b(9, 0);
  const BatchedRun run = run_chain_batched(target, q0, cfg, {}, a);
  const Trajectory plain = run_chain(target, q0, n, 0, b);
  REQUIRE(run.trajectory.size() == plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK((run.trajectory.records[i].x - plain.records[i].x)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((run.trajectory.records[i].y - plain.records[i].y)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(run.trajectory.records[i].alpha == plain.records[i].alpha);
  }
}

TEST_CASE("zero step size freezes the proposal across batches") {
  const TargetModel target = std_gaussian_target(2);
  const GaussianProposal q0(Vector::Ones(2), CholeskyFactor::identity(2));
  AdaptationConfig cfg;
  cfg.batch_size = 20;
  cfg.n_batches = 5;
  cfg.adam_mu.step = 0.0;
  cfg.adam_L.step = 0.0;
  RngStream rng(10, 0);
  const BatchedRun run =
      run_chain_batched(target, q0, cfg, {FunctionSpec::coordinate(0)}, rng);
  REQUIRE(run.trajectory.batches.size() == 5);
  for (const BatchInfo& b : run.trajectory.batches) {
    CHECK((b.proposal->mu - q0.mu).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.proposal->L.matrix() - q0.L.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.eq_f.size() == 1);
    CHECK(b.eq_f[0] == 1.0);  // mu_0 of the frozen proposal
  }
  CHECK((run.final_proposal.mu - q0.mu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adaptation drives the proposal onto a 2-D gaussian target") {
  const TargetModel target = std_gaussian_target(2);
  Matrix L0(2, 2);
  L0 << 1.0, 0.0, 1.0, 1.0;
  const GaussianProposal q0(Vector::Ones(2), CholeskyFactor(L0));
  CHECK(gaussian_kl_to_standard(q0) > 1.0);

  AdaptationConfig cfg;
  cfg.batch_size = 50;
  cfg.n_batches = 1;
  cfg.burn_in_batches = 999;
  cfg.track_kl_to_standard = true;
  RngStream rng(11, 0);
  const BatchedRun run = run_chain_batched(target, q0, cfg, {}, rng);
  CHECK(gaussian_kl_to_standard(run.final_proposal) < 0.01);
}

TEST_CASE("gradient-free targets are rejected by the batched runner") {
  TargetModel t;
  t.dim = 1;
  t.id = "no-grad";
  t.log_density = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  AdaptationConfig cfg;
  RngStream rng(12, 0);
  CHECK_THROWS_AS(
      run_chain_batched(t, GaussianProposal::standard(1), cfg, {}, rng),
      GradientUnavailable);
}

TEST_CASE("trajectory batches partition the records") {
  const TargetModel target = std_gaussian_target(1);
  AdaptationConfig cfg;
  cfg.batch_size = 25;
  cfg.n_batches = 8;
  cfg.burn_in_batches = 3;
  RngStream rng(13, 0);
  const BatchedRun run = run_chain_batched(
      target, GaussianProposal::standard(1), cfg, {}, rng);
  REQUIRE(run.trajectory.batches.size() == 8);
  std::size_t expect_begin = 0;
  for (const BatchInfo& b : run.trajectory.batches) {
    CHECK(b.begin == expect_begin);
    CHECK(b.end == b.begin + 25);
    expect_begin = b.end;
  }
  CHECK(expect_begin == run.trajectory.size());
  CHECK(run.trajectory.meta.burn_in == 75);
}

TEST_CASE("trajectory csv dump has the documented layout") {
  const GaussianProposal q = GaussianProposal::standard(2);
  const TargetModel target = std_gaussian_target(2);
  RngStream rng(14, 0);
  const Trajectory traj = run_chain(target, q, 50, 0, rng);
  const auto file = std::filesystem::temp_directory_path() / "vrim_traj.csv";
  dump_trajectory_csv(traj, file);
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,accepted,alpha,x0,x1,y0,y1");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 50);
  std::filesystem::remove(file);
}
