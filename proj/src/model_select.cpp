#include "vrim/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "vrim/chain.hpp"
#include "vrim/core/parallel.hpp"
#include "vrim/core/quadrature.hpp"

namespace vrim {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kLn10 = 2.302585092994045684017991454684;

struct EmptyComponent : NumericalError {
  using NumericalError::NumericalError;
};
}  // namespace

RegressionProblem::RegressionProblem(Matrix X, Vector y, double noise_sd,
                                     std::vector<int> model)
    : X_(std::move(X)),
      y_(std::move(y)),
      noise_sd_(noise_sd),
      model_(std::move(model)),
      chol_xtx_(CholeskyFactor::identity(1)) {
  if (!(noise_sd_ > 0.0))
    throw NumericalError("RegressionProblem: noise sd must be positive");
  std::sort(model_.begin(), model_.end());
  for (int j : model_)
    if (j < 0 || j >= X_.cols())
      throw NumericalError("RegressionProblem: model index out of range");

  const int d = static_cast<int>(model_.size());
  const double sigma2 = noise_sd_ * noise_sd_;
  sum_y_sq_ = y_.squaredNorm();
  Xm_.resize(X_.rows(), d);
  // The empty (null) model keeps a placeholder factor; nothing consults it.
  if (d == 0) {
    xtx_.resize(0, 0);
    s_quad_ = 0.0;
    log_lik_max_ = -0.5 * static_cast<double>(n_obs()) *
                       (kLog2Pi + std::log(sigma2)) -
                   0.5 * sum_y_sq_ / sigma2;
    return;
  }
  for (int k = 0; k < d; ++k) Xm_.col(k) = X_.col(model_[k]);
  xtx_ = Xm_.transpose() * Xm_;
  chol_xtx_ = chol_decompose(xtx_);

  const Vector s = Xm_.transpose() * y_;
  const Vector z = chol_xtx_.solve_lower(s);
  s_quad_ = z.squaredNorm();

  const Vector beta_ls = chol_xtx_.solve_upper_t(z);
  const double rss = (y_ - Xm_ * beta_ls).squaredNorm();
  log_lik_max_ = -0.5 * static_cast<double>(n_obs()) *
                     (kLog2Pi + std::log(sigma2)) -
                 0.5 * rss / sigma2;
}

RegressionProblem RegressionProblem::with_model(std::vector<int> model) const {
  return RegressionProblem(X_, y_, noise_sd_, std::move(model));
}

std::string RegressionProblem::model_label() const {
  if (model_.empty()) return "null";
  std::string s = "X";
  for (int j : model_) s += std::to_string(j + 1);
  return s;
}

double RegressionProblem::log_likelihood(const Vector& beta) const {
  const double sigma2 = noise_sd_ * noise_sd_;
  const double rss = (y_ - Xm_ * beta).squaredNorm();
  return -0.5 * static_cast<double>(n_obs()) * (kLog2Pi + std::log(sigma2)) -
         0.5 * rss / sigma2;
}

double RegressionProblem::log_likelihood_max() const { return log_lik_max_; }

Vector RegressionProblem::sample_prior(RngStream& rng) const {
  if (model_.empty()) return Vector(0);
  const double g = sample_g(rng);
  const double sd = std::sqrt(g);
  Vector z(model_dim());
  for (int i = 0; i < model_dim(); ++i) z(i) = sd * rng.normal();
  return chol_xtx_.solve_upper_t(z);
}

RegressionProblem gen_synthetic(RngStream& rng) {
  const int n = 50, p = 4;
  Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  const double sigma = 2.5;
  Vector y(n);
  for (int i = 0; i < n; ++i)
    y(i) = 4.0 * X(i, 2) + 4.0 * X(i, 3) + sigma * rng.normal();
  return RegressionProblem(std::move(X), std::move(y), sigma, {0, 1, 2, 3});
}

double sample_g(RngStream& rng) { return gprior_inverse_cdf(rng.uniform_oo()); }

Matrix sample_generic_prior(int count, int d, RngStream& rng) {
  Matrix out(count, d);
  for (int i = 0; i < count; ++i) {
    const double sd = std::sqrt(sample_g(rng));
    for (int j = 0; j < d; ++j) out(i, j) = sd * rng.normal();
  }
  return out;
}

namespace {

// One EM pass over the squared norms; throws EmptyComponent when a
// component's responsibility mass underflows.
MixtureFit em_run(const Vector& snorm, int d, int K, const Vector& g_init) {
  const auto n = snorm.size();
  const double dd = static_cast<double>(d);
  Vector w = Vector::Constant(K, 1.0 / K);
  Vector g = g_init;
  Matrix logr(n, K);
  MixtureFit fit;
  fit.K = K;

  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 500; ++iter) {
    double loglik = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        logr(j, k) = std::log(w(k)) - 0.5 * dd * (kLog2Pi + std::log(g(k))) -
                     0.5 * snorm(j) / g(k);
        mx = std::max(mx, logr(j, k));
      }
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += std::exp(logr(j, k) - mx);
      const double lse = mx + std::log(s);
      loglik += lse;
      for (int k = 0; k < K; ++k) logr(j, k) -= lse;
    }
    fit.em_trace.push_back(loglik);

    for (int k = 0; k < K; ++k) {
      double mass = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double r = std::exp(logr(j, k));
        mass += r;
        weighted += r * snorm(j);
      }
      if (!(mass > 1e-12 * static_cast<double>(n)))
        throw EmptyComponent("em_fit_scale_mixture: component emptied");
      w(k) = mass / static_cast<double>(n);
      g(k) = weighted / (dd * mass);
    }

    if (iter > 0 && std::abs(loglik - prev) <
                        1e-8 * (std::abs(prev) + 1.0))
      break;
    prev = loglik;
  }
  fit.weights = w;
  fit.scales = g;
  return fit;
}

}  // namespace

MixtureFit em_fit_scale_mixture(const Matrix& samples, int K) {
  if (K < 1) throw NumericalError("em_fit_scale_mixture: K must be >= 1");
  const auto n = samples.rows();
  const int d = static_cast<int>(samples.cols());
  if (n < K) throw NumericalError("em_fit_scale_mixture: more components than samples");
  Vector snorm(n);
  for (Eigen::Index j = 0; j < n; ++j) snorm(j) = samples.row(j).squaredNorm();

  // Scales start log-spaced across the central mass of ||beta'||^2 / d.
  Vector sorted = snorm;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  const double dd = static_cast<double>(d);
  const double lo = std::max(sorted(static_cast<Eigen::Index>(0.01 * (n - 1))) / dd,
                             1e-8);
  const double hi = std::max(sorted(static_cast<Eigen::Index>(0.99 * (n - 1))) / dd,
                             lo * (1.0 + 1e-6));
  for (int restart = 0; restart < 6; ++restart) {
    Vector g_init(K);
    const double jitter = 1.0 + 0.37 * restart;
    for (int k = 0; k < K; ++k) {
      const double t = K == 1 ? 0.5 : static_cast<double>(k) / (K - 1);
      g_init(k) = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) *
                  jitter;
    }
    try {
      return em_run(snorm, d, K, g_init);
    } catch (const EmptyComponent&) {
      if (restart == 5) throw;
    }
  }
  throw NumericalError("em_fit_scale_mixture: unreachable");
}

double analytic_likelihood_expectation(const RegressionProblem& problem,
                                       const MixtureFit& fit) {
  const double sigma2 = problem.noise_sd() * problem.noise_sd();
  const double d = problem.model_dim();
  const double log_c =
      -0.5 * problem.n_obs() * (kLog2Pi + std::log(sigma2)) -
      0.5 * problem.sum_y_sq() / sigma2;
  double mx = -std::numeric_limits<double>::infinity();
  Vector terms(fit.K);
  for (int k = 0; k < fit.K; ++k) {
    const double g = fit.scales(k);
    terms(k) = std::log(fit.weights(k)) - 0.5 * d * std::log1p(g / sigma2) +
               0.5 * (g / (sigma2 * (g + sigma2))) * problem.s_quad();
    mx = std::max(mx, terms(k));
  }
  double s = 0.0;
  for (int k = 0; k < fit.K; ++k) s += std::exp(terms(k) - mx);
  return log_c + mx + std::log(s);
}

double marginal_likelihood_oracle(const RegressionProblem& problem) {
  const double sigma2 = problem.noise_sd() * problem.noise_sd();
  const double d = problem.model_dim();
  const double log_c =
      -0.5 * problem.n_obs() * (kLog2Pi + std::log(sigma2)) -
      0.5 * problem.sum_y_sq() / sigma2;
  const double quad = problem.s_quad();

  auto log_integrand = [&](double g) {
    return -0.5 * d * std::log1p(g / sigma2) +
           0.5 * (g / (sigma2 * (g + sigma2))) * quad -
           2.0 * std::log1p(g);
  };
  // Running max over a coarse sweep fixes the shift before quadrature.
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 4000; ++i) {
    const double u = static_cast<double>(i) / 4000.0;
    shift = std::max(shift, log_integrand(u / (1.0 - u)));
  }
  const double integral = quadrature_1d(
      [&](double g) { return std::exp(log_integrand(g) - shift); }, 0.0,
      std::numeric_limits<double>::infinity(), 1e-10);
  if (!(integral > 0.0))
    throw QuadratureError("marginal_likelihood_oracle: vanishing integral");
  return -(log_c + shift + std::log(integral)) / kLn10;
}

ScaleMixtureProposal mixture_proposal(const RegressionProblem& problem,
                                      const MixtureFit& fit) {
  return ScaleMixtureProposal(fit.weights, fit.scales, problem.chol_xtx());
}

namespace {

MarginalEstimate finish_estimate(const RegressionProblem& problem,
                                 EstimatorReport report, double shift,
                                 double acc_rate) {
  MarginalEstimate out;
  out.shift = shift;
  out.shifted_value = report.value;
  out.acceptance_rate = acc_rate;
  if (!(report.value > 0.0))
    throw NumericalError("marginal estimate is not positive; cannot report on "
                         "the log scale (model " +
                         problem.model_label() + ")");
  out.neglog10 = -(std::log(report.value) + shift) / kLn10;
  report.value = out.neglog10;
  out.report = report;
  return out;
}

}  // namespace

MarginalEstimate estimate_marginal_im(const RegressionProblem& problem,
                                      const MixtureFit& fit, int n,
                                      RngStream& rng, int pm_samples) {
  if (n < 1) throw NumericalError("estimate_marginal_im: n must be >= 1");
  const double shift = problem.log_likelihood_max();
  auto aux = std::make_shared<RngStream>(
      rng.seed(), rng.stream_id() ^ (1ULL << 63));
  const TargetModel target =
      gprior_pseudo_marginal(problem.xtx(), pm_samples, aux);
  const ScaleMixtureProposal q = mixture_proposal(problem, fit);

  const Trajectory traj = run_chain(target, q, n, 0, rng);
  const double eq_f_log = analytic_likelihood_expectation(problem, fit);
  const double eq_f = std::exp(eq_f_log - shift);
  ScalarFn F = [&problem, shift](const Vector& beta) {
    return std::exp(problem.log_likelihood(beta) - shift);
  };
  EstimatorReport report = est_imcv(traj, F, eq_f);
  return finish_estimate(problem, std::move(report), shift,
                         traj.acceptance_rate());
}

MarginalEstimate estimate_marginal_cmc(const RegressionProblem& problem, int n,
                                       RngStream& rng) {
  if (n < 1) throw NumericalError("estimate_marginal_cmc: n must be >= 1");
  const double shift = problem.log_likelihood_max();
  std::vector<Vector> draws(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) draws[i] = problem.sample_prior(rng);
  ScalarFn F = [&problem, shift](const Vector& beta) {
    return std::exp(problem.log_likelihood(beta) - shift);
  };
  EstimatorReport report = est_cmc(draws, F);
  return finish_estimate(problem, std::move(report), shift, 0.0);
}

std::vector<ModelScanRow> run_model_scan(const RegressionProblem& problem,
                                         const ModelScanOptions& opts) {
  if (opts.replicas < 2)
    throw NumericalError("run_model_scan: need at least two replicas");
  const int p = static_cast<int>(problem.design().cols());

  // The generic-prior EM fit only depends on the model dimension.
  std::vector<MixtureFit> fit_by_dim(p + 1);
  for (int d = 1; d <= p; ++d) {
    RngStream em_rng(opts.seed, (1ULL << 56) + static_cast<std::uint64_t>(d));
    const Matrix samples = sample_generic_prior(opts.em_samples, d, em_rng);
    fit_by_dim[d] = em_fit_scale_mixture(samples, opts.mixture_components);
  }

  std::vector<std::vector<int>> subsets;
  for (int mask = 1; mask < (1 << p); ++mask) {
    std::vector<int> subset;
    for (int j = 0; j < p; ++j)
      if (mask & (1 << j)) subset.push_back(j);
    subsets.push_back(std::move(subset));
  }
  std::sort(subsets.begin(), subsets.end(),
            [](const auto& a, const auto& b) {
              return a.size() != b.size() ? a.size() < b.size() : a < b;
            });

  std::vector<ModelScanRow> rows(subsets.size());
  const auto n_models = static_cast<std::int64_t>(subsets.size());
  par::parallel_for(n_models, [&](std::int64_t mi) {
    ModelScanRow& row = rows[static_cast<std::size_t>(mi)];
    try {
      const RegressionProblem sub = problem.with_model(subsets[mi]);
      const MixtureFit& fit = fit_by_dim[sub.model_dim()];
      row.model = sub.model_label();
      row.dim = sub.model_dim();
      row.oracle_neglog10 = marginal_likelihood_oracle(sub);

      std::vector<double> im_log, cmc_log, im_lin, cmc_lin;
      for (int r = 0; r < opts.replicas; ++r) {
        const std::uint64_t base =
            (static_cast<std::uint64_t>(mi) << 32) |
            static_cast<std::uint64_t>(r);
        try {
          RngStream chain_rng(opts.seed, base);
          const MarginalEstimate im =
              estimate_marginal_im(sub, fit, opts.chain_length, chain_rng,
                                   opts.pseudo_marginal_samples);
          RngStream cmc_rng(opts.seed, base | (1ULL << 48));
          const MarginalEstimate cmc =
              estimate_marginal_cmc(sub, opts.chain_length, cmc_rng);
          im_log.push_back(im.neglog10);
          cmc_log.push_back(cmc.neglog10);
          im_lin.push_back(im.shifted_value);
          cmc_lin.push_back(cmc.shifted_value);
        } catch (const std::exception&) {
          // replica failed; the scan continues on the survivors
        }
      }
      if (im_log.size() < 2)
        throw NumericalError("fewer than two surviving replicas");
      auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) /
               static_cast<double>(v.size());
      };
      row.imcv_neglog10 = mean(im_log);
      row.cmc_neglog10 = mean(cmc_log);
      row.vrf = vrf(cmc_lin, im_lin);
      row.replicas_used = static_cast<int>(im_log.size());
      row.imcv_replicas = std::move(im_log);
      row.cmc_replicas = std::move(cmc_log);
    } catch (const std::exception& e) {
      row.error = e.what();
      if (row.model.empty()) {
        row.model = "X";
        for (int j : subsets[mi]) row.model += std::to_string(j + 1);
      }
    }
  });
  return rows;
}

}  // namespace vrim
