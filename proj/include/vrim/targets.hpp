#ifndef VRIM_TARGETS_HPP
#define VRIM_TARGETS_HPP

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "vrim/core/linalg.hpp"
#include "vrim/core/rng.hpp"

namespace vrim {

// Unnormalised target: pi(x) proportional to exp{f(x)}.  The gradient is
// optional (the pseudo-marginal target has none).  When both value and
// gradient are needed at one point, value_and_grad shares the expensive
// factorisations; it is present whenever grad_log_density is.
struct TargetModel {
  int dim = 0;
  std::string id;
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> grad_log_density;
  std::function<std::pair<double, Vector>(const Vector&)> value_and_grad;
  // A stateful density (the pseudo-marginal target advances an auxiliary
  // stream per evaluation) must be evaluated serially and by one chain only.
  bool stateful = false;

  bool has_gradient() const { return static_cast<bool>(grad_log_density); }
  std::pair<double, Vector> eval_with_grad(const Vector& x) const {
    if (value_and_grad) return value_and_grad(x);
    return {log_density(x), grad_log_density(x)};
  }
};

struct LogisticData {
  Matrix X;  // N x d, intercept column included
  Vector y;  // binary labels
};

struct GpData {
  Matrix X;  // N x D, standardised
  Vector y;  // centred responses
};

// f(x) = -||x||^2 / 2.
TargetModel std_gaussian_target(int d);

// Any Gaussian, used for the q = pi collapse checks.
TargetModel gaussian_target(const Vector& mu, const CholeskyFactor& L);

// Bayesian logistic regression: Bernoulli log-likelihood plus N(0, v I)
// prior, both in softplus form so large linear predictors stay finite.
TargetModel logistic_posterior(const LogisticData& data, double prior_variance);

// GP regression hyperparameter posterior over x = (log s2, log sf2, log l2)
// with a squared-exponential kernel and N(0, v I) prior in log space.
TargetModel gp_hyper_posterior(const GpData& data, double prior_variance);

// Mixture-of-scales regression prior estimated by Monte Carlo inside the
// density: f(beta) = log (1/L) sum_i N(beta | 0, g_i (X^T X)^{-1}) with
// fresh g_i ~ (1+g)^{-2} per evaluation from the supplied auxiliary stream.
TargetModel gprior_pseudo_marginal(const Matrix& xtx, int mc_samples,
                                   std::shared_ptr<RngStream> aux);

// Inverse CDF of p(g) = (1+g)^{-2}: g = u / (1-u).
double gprior_inverse_cdf(double u);

}  // namespace vrim

#endif
