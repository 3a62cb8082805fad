#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vrim/chain.hpp"

using namespace vrim;

namespace {

GaussianProposal proposal_2d() {
  Matrix Lm(2, 2);
  Lm << 1.2, 0.0, -0.5, 0.8;
  Vector mu(2);
  mu << 0.4, -0.7;
  return GaussianProposal(mu, CholeskyFactor(Lm));
}

// Monte Carlo average of a gradient estimator over fresh reparametrised
// draws, with a 4-SE band per component.
template <class GradFn>
void check_gradient_mean(const TargetModel& target, const GaussianProposal& q,
                         GradFn&& grad_fn, const Vector& expected_mu,
                         const Matrix& expected_L, int n,
                         std::uint64_t stream) {
  RngStream rng(41, stream);
  const int d = q.dim();
  Vector mu_sum = Vector::Zero(d), mu_sq = Vector::Zero(d);
  Matrix L_sum = Matrix::Zero(d, d), L_sq = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    auto [y, z] = q.sample(rng);
    const KlGradient g = grad_fn(target, q, y, z);
    mu_sum += g.g_mu;
    mu_sq += g.g_mu.cwiseProduct(g.g_mu);
    L_sum += g.g_L;
    L_sq += g.g_L.cwiseProduct(g.g_L);
  }
  for (int j = 0; j < d; ++j) {
    const double mean = mu_sum(j) / n;
    const double se =
        std::sqrt(std::max(0.0, mu_sq(j) / n - mean * mean) / n) + 1e-12;
    CHECK(std::abs(mean - expected_mu(j)) < 4.0 * se);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      const double mean = L_sum(i, j) / n;
      const double se = std::sqrt(std::max(0.0, L_sq(i, j) / n - mean * mean) /
                                  n) + 1e-12;
      CHECK(std::abs(mean - expected_L(i, j)) < 4.0 * se);
    }
}

// d KL / d(mu, L) for target N(0, I) by finite differences of the closed
// form, the reference both estimators are checked against.
void closed_form_kl_grad(const GaussianProposal& q, Vector& g_mu, Matrix& g_L) {
  const double h = 1e-6;
  const int d = q.dim();
  g_mu.resize(d);
  for (int j = 0; j < d; ++j) {
    GaussianProposal hi = q, lo = q;
    hi.mu(j) += h;
    lo.mu(j) -= h;
    g_mu(j) =
        (gaussian_kl_to_standard(hi) - gaussian_kl_to_standard(lo)) / (2 * h);
  }
  g_L = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      Matrix mh = q.L.matrix(), ml = q.L.matrix();
      mh(i, j) += h;
      ml(i, j) -= h;
      g_L(i, j) = (gaussian_kl_to_standard(GaussianProposal(q.mu, CholeskyFactor(mh))) -
                   gaussian_kl_to_standard(GaussianProposal(q.mu, CholeskyFactor(ml)))) /
                  (2 * h);
    }
}

}  // namespace

TEST_CASE("adam: zero gradient, first-step magnitude, descent sign") {
  AdamParams p;
  p.step = 0.01;
  {
    AdamState s(3, p);
    const Vector delta = adam_step(s, Vector::Zero(3));
    CHECK(delta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.t == 1);
  }
  {
    AdamState s(1, p);
    const Vector delta = adam_step(s, Vector::Ones(1));
    CHECK(delta(0) == doctest::Approx(-0.01).epsilon(1e-6));
  }
  {
    AdamState s(1, p);
    double theta = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Vector delta = adam_step(s, Vector::Ones(1));
      CHECK(delta(0) < 0.0);
      theta += delta(0);
    }
    CHECK(theta < -0.3);
  }
  {
    AdamState s(1, p);
    CHECK_THROWS_AS(
        adam_step(s, Vector::Constant(1, std::numeric_limits<double>::infinity())),
        NonFiniteGradient);
  }
}

TEST_CASE("adam step decay follows the configured schedule") {
  AdamParams p;
  p.step = 0.1;
  p.decay_tau = 10.0;
  p.decay_kappa = 0.5;
  CHECK(p.step_at(0) == doctest::Approx(0.1));
  CHECK(p.step_at(10) == doctest::Approx(0.1 / std::sqrt(2.0)));
  AdamParams q;
  q.step = 0.1;
  CHECK(q.step_at(1000) == 0.1);
}

TEST_CASE("dsvi gradient is centred at zero when q equals the target") {
  const GaussianProposal q = proposal_2d();
  const TargetModel target = gaussian_target(q.mu, q.L);
  check_gradient_mean(
      target, q,
      [](const TargetModel& t, const GaussianProposal& qq, const Vector& y,
         const Vector& z) { return kl_grad_dsvi(t, qq, y, z); },
      Vector::Zero(2), Matrix::Zero(2, 2), 100000, 1);
}

TEST_CASE("dsvi mean-gradient matches the closed form for a shifted proposal") {
  Vector mu(2);
  mu << 0.6, -0.3;
  const GaussianProposal q(mu, CholeskyFactor::identity(2));
  const TargetModel target = std_gaussian_target(2);
  // KL gradient in mu is mu itself; in L it is L - diag(1/L_kk) = 0 at I...
  Vector g_mu;
  Matrix g_L;
  closed_form_kl_grad(q, g_mu, g_L);
  CHECK(tutil::max_rel_err(g_mu, mu) < 1e-5);
  check_gradient_mean(
      target, q,
      [](const TargetModel& t, const GaussianProposal& qq, const Vector& y,
         const Vector& z) { return kl_grad_dsvi(t, qq, y, z); },
      g_mu, g_L, 100000, 2);
}

TEST_CASE("dsvi scale gradient matches d/dL of the closed-form KL in 1-D") {
  const GaussianProposal q(Vector::Zero(1),
                           CholeskyFactor(Matrix::Constant(1, 1, 2.0)));
  const TargetModel target = std_gaussian_target(1);
  // KL = (L^2 - 1 - 2 log L)/2, so dKL/dL = L - 1/L = 1.5 at L = 2.
  check_gradient_mean(
      target, q,
      [](const TargetModel& t, const GaussianProposal& qq, const Vector& y,
         const Vector& z) { return kl_grad_dsvi(t, qq, y, z); },
      Vector::Zero(1), Matrix::Constant(1, 1, 1.5), 100000, 3);
}

TEST_CASE("stl gradient vanishes draw-by-draw when q equals the target") {
  const GaussianProposal q = proposal_2d();
  const TargetModel target = gaussian_target(q.mu, q.L);
  RngStream rng(43, 0);
  for (int i = 0; i < 200; ++i) {
    auto [y, z] = q.sample(rng);
    const KlGradient g = kl_grad_stl(target, q, y, z);
    CHECK(g.g_mu.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.g_L.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("stl mean-gradient agrees with the closed form and with dsvi") {
  Matrix Lm(2, 2);
  Lm << 1.5, 0.0, 0.3, 0.9;
  Vector mu(2);
  mu << 0.5, 0.2;
  const GaussianProposal q(mu, CholeskyFactor(Lm));
  const TargetModel target = std_gaussian_target(2);
  Vector g_mu;
  Matrix g_L;
  closed_form_kl_grad(q, g_mu, g_L);
  check_gradient_mean(
      target, q,
      [](const TargetModel& t, const GaussianProposal& qq, const Vector& y,
         const Vector& z) { return kl_grad_stl(t, qq, y, z); },
      g_mu, g_L, 100000, 4);
  check_gradient_mean(
      target, q,
      [](const TargetModel& t, const GaussianProposal& qq, const Vector& y,
         const Vector& z) { return kl_grad_dsvi(t, qq, y, z); },
      g_mu, g_L, 100000, 5);
}

TEST_CASE("batch update equals a hand-built average plus adam step") {
  const GaussianProposal q = proposal_2d();
  const TargetModel target = std_gaussian_target(2);
  RngStream rng(44, 0);
  std::vector<ProposalDraw> draws(16);
  for (auto& d : draws) {
    auto [y, z] = q.sample(rng);
    d.y = y;
    d.z = z;
    d.grad_log_pi = target.grad_log_density(y);
  }

  Vector g_mu = Vector::Zero(2);
  Matrix g_L = Matrix::Zero(2, 2);
  for (const ProposalDraw& d : draws) {
    const KlGradient g = kl_grad_dsvi(q, d.grad_log_pi, d.z);
    g_mu += g.g_mu;
    g_L += g.g_L;
  }
  g_mu /= 16.0;
  g_L /= 16.0;

  AdamState mu_a(2), mu_b(2);
  AdamState L_a(3), L_b(3);
  const GaussianProposal updated =
      batch_update(q, draws, GradEstimator::dsvi, mu_a, L_a);
  const Vector expected_mu = q.mu + adam_step(mu_b, g_mu);
  Matrix expected_L = q.L.matrix();
  detail::unflatten_lower_add(expected_L,
                              adam_step(L_b, detail::flatten_lower(g_L)));
  CHECK((updated.mu - expected_mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((updated.L.matrix() - expected_L).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the factor diagonal is clamped from below") {
  GaussianProposal q(Vector::Zero(1),
                     CholeskyFactor(Matrix::Constant(1, 1, 1e-7)));
  const TargetModel target = std_gaussian_target(1);
  AdamParams big;
  big.step = 10.0;
  AdamState mu_s(1, big), L_s(1, big);
  RngStream rng(45, 0);
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<ProposalDraw> draws(4);
    for (auto& d : draws) {
      auto [y, z] = q.sample(rng);
      d.y = y;
      d.z = z;
      d.grad_log_pi = target.grad_log_density(y);
    }
    q = batch_update(q, draws, GradEstimator::dsvi, mu_s, L_s);
    CHECK(q.L.matrix()(0, 0) >= 1e-8);
  }
}

TEST_CASE("adaptation reaches high acceptance with a downward KL trend") {
  for (int d : {5, 10}) {
    const TargetModel target = std_gaussian_target(d);
    Matrix L0 = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) L0(i, j) = 1.0;
    const GaussianProposal q0(Vector::Ones(d), CholeskyFactor(L0));

    AdaptationConfig cfg;
    cfg.batch_size = 50;
    cfg.n_batches = 1;
    cfg.burn_in_batches = 999;
    cfg.track_kl_to_standard = true;
    RngStream rng(d == 5 ? 47 : 46, 0);
    const BatchedRun run = run_chain_batched(target, q0, cfg, {}, rng);

    RngStream sample_rng(46, 1);
    const Trajectory traj =
        run_chain(target, run.final_proposal, 5000, 0, sample_rng);
    CHECK(traj.acceptance_rate() >= 0.95);

    // KL checkpoints every 50 batches trend downward once adaptation
    // settles.
    int down = 0, total = 0;
    for (std::size_t i = 100; i + 50 < run.trace.size(); i += 50) {
      ++total;
      if (run.trace[i + 50].kl_to_standard <= run.trace[i].kl_to_standard)
        ++down;
    }
    CHECK(total >= 15);
    CHECK(double(down) / double(total) >= 0.9);
  }
}
