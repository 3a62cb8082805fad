#ifndef VRIM_MODEL_SELECT_HPP
#define VRIM_MODEL_SELECT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vrim/estimators.hpp"
#include "vrim/proposals.hpp"
#include "vrim/targets.hpp"

namespace vrim {

// Linear regression y = X beta + eps with a known noise scale and a chosen
// submodel of the columns; the submodel's cross-product factorisation and
// sufficient statistics are cached.
class RegressionProblem {
 public:
  RegressionProblem(Matrix X, Vector y, double noise_sd,
                    std::vector<int> model);

  RegressionProblem with_model(std::vector<int> model) const;

  const Matrix& design() const { return X_; }
  const Vector& response() const { return y_; }
  double noise_sd() const { return noise_sd_; }
  const std::vector<int>& model() const { return model_; }
  std::string model_label() const;
  int model_dim() const { return static_cast<int>(model_.size()); }
  int n_obs() const { return static_cast<int>(X_.rows()); }

  const Matrix& design_m() const { return Xm_; }
  const Matrix& xtx() const { return xtx_; }
  const CholeskyFactor& chol_xtx() const { return chol_xtx_; }
  // S^T (X_m^T X_m)^{-1} S with S = X_m^T y.
  double s_quad() const { return s_quad_; }
  double sum_y_sq() const { return sum_y_sq_; }

  // log f(y | m, beta) for the Gaussian likelihood at the known noise scale.
  double log_likelihood(const Vector& beta) const;
  // Likelihood value at the least-squares fit; an upper bound over beta used
  // as the scaling shift for estimator arithmetic.
  double log_likelihood_max() const;

  // Exact draw from the mixture-of-scales prior restricted to this model.
  Vector sample_prior(RngStream& rng) const;

 private:
  Matrix X_;
  Vector y_;
  double noise_sd_;
  std::vector<int> model_;
  Matrix Xm_, xtx_;
  CholeskyFactor chol_xtx_;
  double s_quad_ = 0.0, sum_y_sq_ = 0.0, log_lik_max_ = 0.0;
};

// N = 50 observations on four N(0,1) predictors with
// y ~ N(4 x3 + 4 x4, 2.5^2); the full model is selected.
RegressionProblem gen_synthetic(RngStream& rng);

// Draw from p(g) = (1+g)^{-2} by inverse CDF.
double sample_g(RngStream& rng);

struct MixtureFit {
  int K = 0;
  Vector weights;
  Vector scales;
  std::vector<double> em_trace;  // per-iteration log-likelihood, non-decreasing
};

// EM for a zero-mean Gaussian scale mixture sum_i w_i N(0, g_i I_d) fitted
// to draws from the generic prior; restarts with jittered scales when a
// component empties.
MixtureFit em_fit_scale_mixture(const Matrix& samples, int K);

// Draw `count` samples from the generic prior beta' ~ N(0, g I_d),
// g ~ (1+g)^{-2}.
Matrix sample_generic_prior(int count, int d, RngStream& rng);

// log E_q[f(y | m, beta)] under the fitted mixture proposal, in closed form.
double analytic_likelihood_expectation(const RegressionProblem& problem,
                                       const MixtureFit& fit);

// -log10 f(y | m) by adaptive quadrature over g after the beta integral is
// done analytically; evaluated with a max-shift in log space.
double marginal_likelihood_oracle(const RegressionProblem& problem);

// Proposal over beta for the submodel: the fitted scale mixture pushed
// through (X_m^T X_m)^{-1/2}.
ScaleMixtureProposal mixture_proposal(const RegressionProblem& problem,
                                      const MixtureFit& fit);

struct MarginalEstimate {
  EstimatorReport report;      // value on the -log10 scale
  double neglog10 = 0.0;
  double shifted_value = 0.0;  // estimator value on the exp(log f - M) scale
  double shift = 0.0;          // M
  double acceptance_rate = 0.0;
};

// IM control-variate estimate of the marginal likelihood: pseudo-marginal
// prior target, mixture proposal, the likelihood as F.
MarginalEstimate estimate_marginal_im(const RegressionProblem& problem,
                                      const MixtureFit& fit, int n,
                                      RngStream& rng, int pm_samples = 100);

// Crude Monte Carlo baseline: average likelihood over exact prior draws.
MarginalEstimate estimate_marginal_cmc(const RegressionProblem& problem, int n,
                                       RngStream& rng);

struct ModelScanRow {
  std::string model;
  int dim = 0;
  double imcv_neglog10 = 0.0;
  double cmc_neglog10 = 0.0;
  double oracle_neglog10 = 0.0;
  double vrf = 0.0;
  int replicas_used = 0;
  std::string error;  // non-empty when the model failed
  // per-replica estimates on the -log10 scale, surviving replicas only
  std::vector<double> imcv_replicas, cmc_replicas;
};

struct ModelScanOptions {
  int mixture_components = 4;
  int chain_length = 1000;
  int replicas = 100;
  int em_samples = 1000;
  int pseudo_marginal_samples = 100;
  std::uint64_t seed = 1;
};

// All nonempty submodels of the four predictors: EM fit shared per model
// dimension, IM and CMC replicas, oracle value and VRF per model.
std::vector<ModelScanRow> run_model_scan(const RegressionProblem& problem,
                                         const ModelScanOptions& opts);

}  // namespace vrim

#endif
