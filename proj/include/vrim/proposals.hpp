#ifndef VRIM_PROPOSALS_HPP
#define VRIM_PROPOSALS_HPP

#include <functional>
#include <string>
#include <utility>

#include "vrim/core/distributions.hpp"
#include "vrim/core/linalg.hpp"
#include "vrim/core/rng.hpp"

namespace vrim {

// Reparametrisable Gaussian proposal q(x) = N(x | mu, L L^T).
struct GaussianProposal {
  Vector mu;
  CholeskyFactor L;

  GaussianProposal(Vector mu_in, CholeskyFactor L_in)
      : mu(std::move(mu_in)), L(std::move(L_in)) {
    if (mu.size() != L.dim())
      throw DimensionMismatch("GaussianProposal: mu and L disagree");
  }
  static GaussianProposal standard(int d) {
    return GaussianProposal(Vector::Zero(d), CholeskyFactor::identity(d));
  }

  int dim() const { return static_cast<int>(mu.size()); }

  // (y, z) with y = mu + L z; z kept for gradient reuse.
  std::pair<Vector, Vector> sample(RngStream& rng) const {
    return mvn_sample_reparam(mu, L, rng);
  }
  double logpdf(const Vector& y) const { return mvn_logpdf(y, mu, L); }
};

// Zero-mean Gaussian scale mixture pushed through a linear map:
//   q(beta) = sum_i w_i N(beta | 0, g_i (X^T X)^{-1}),
// sampled as beta' ~ sum_i w_i N(0, g_i I) followed by the triangular solve
// L_x^T beta = beta' where L_x is the Cholesky factor of X^T X.
class ScaleMixtureProposal {
 public:
  ScaleMixtureProposal(Vector weights, Vector scales, CholeskyFactor chol_xtx);

  int dim() const { return chol_xtx_.dim(); }
  int components() const { return static_cast<int>(weights_.size()); }
  const Vector& weights() const { return weights_; }
  const Vector& scales() const { return scales_; }
  const CholeskyFactor& chol_xtx() const { return chol_xtx_; }

  std::pair<Vector, Vector> sample(RngStream& rng) const;
  double logpdf(const Vector& beta) const;  // log-sum-exp over components

 private:
  Vector weights_, scales_;
  CholeskyFactor chol_xtx_;
  double half_logdet_xtx_;
};

// Closed enumeration of functions whose proposal expectation is analytic;
// `external` carries an arbitrary callable and has no closed form.
struct FunctionSpec {
  enum class Kind { coordinate, coordinate_square, linear, exp_linear, external };

  Kind kind = Kind::coordinate;
  int index = 0;                              // coordinate kinds
  Vector a;                                   // linear / exp_linear
  std::function<double(const Vector&)> fn;    // external
  std::string name;

  static FunctionSpec coordinate(int k);
  static FunctionSpec coordinate_square(int k);
  static FunctionSpec linear(Vector a);
  static FunctionSpec exp_linear(Vector a);
  static FunctionSpec external(std::function<double(const Vector&)> f,
                               std::string name);

  double operator()(const Vector& x) const;
  std::function<double(const Vector&)> evaluator() const;
};

// E_q[F] in closed form for the Gaussian proposal; throws UnsupportedPair
// when no closed form exists, in which case callers fall back to the
// approximate control-variate estimator or supply the expectation themselves.
double analytic_expectation(const GaussianProposal& q, const FunctionSpec& F);
double analytic_expectation(const ScaleMixtureProposal& q, const FunctionSpec& F);

// KL(q || N(0, I)) in closed form; adaptation diagnostic.
double gaussian_kl_to_standard(const GaussianProposal& q);

}  // namespace vrim

#endif
