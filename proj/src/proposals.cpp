#include "vrim/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrim {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

ScaleMixtureProposal::ScaleMixtureProposal(Vector weights, Vector scales,
                                           CholeskyFactor chol_xtx)
    : weights_(std::move(weights)),
      scales_(std::move(scales)),
      chol_xtx_(std::move(chol_xtx)) {
  if (weights_.size() != scales_.size() || weights_.size() == 0)
    throw DimensionMismatch("ScaleMixtureProposal: weights and scales disagree");
  if (std::abs(weights_.sum() - 1.0) > 1e-12)
    throw NumericalError("ScaleMixtureProposal: weights must sum to one");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_(i) > 0.0 && weights_(i) < 1.0) && weights_.size() > 1)
      throw NumericalError("ScaleMixtureProposal: weights must lie in (0,1)");
    if (!(scales_(i) > 0.0))
      throw NumericalError("ScaleMixtureProposal: scales must be positive");
  }
  half_logdet_xtx_ = chol_xtx_.log_det();
}

std::pair<Vector, Vector> ScaleMixtureProposal::sample(RngStream& rng) const {
  const int k = rng.categorical(weights_, components());
  const double sd = std::sqrt(scales_(k));
  Vector beta_prime(dim());
  for (int i = 0; i < dim(); ++i) beta_prime(i) = sd * rng.normal();
  Vector beta = chol_xtx_.solve_upper_t(beta_prime);
  return {std::move(beta), Vector()};
}

double ScaleMixtureProposal::logpdf(const Vector& beta) const {
  if (beta.size() != dim())
    throw DimensionMismatch("ScaleMixtureProposal::logpdf: dimension mismatch");
  // |g A|^{-1/2} with A = (X^T X)^{-1} gives |X^T X|^{1/2} g^{-d/2}; the
  // quadratic form beta^T X^T X beta is one triangular product.
  const double quad =
      (chol_xtx_.matrix().transpose().triangularView<Eigen::Upper>() * beta)
          .squaredNorm();
  const double d = static_cast<double>(dim());
  double max_term = -std::numeric_limits<double>::infinity();
  Vector terms(components());
  for (int i = 0; i < components(); ++i) {
    const double g = scales_(i);
    terms(i) = std::log(weights_(i)) - 0.5 * d * (kLog2Pi + std::log(g)) +
               half_logdet_xtx_ - 0.5 * quad / g;
    max_term = std::max(max_term, terms(i));
  }
  double s = 0.0;
  for (int i = 0; i < components(); ++i) s += std::exp(terms(i) - max_term);
  return max_term + std::log(s);
}

FunctionSpec FunctionSpec::coordinate(int k) {
  FunctionSpec f;
  f.kind = Kind::coordinate;
  f.index = k;
  f.name = "x" + std::to_string(k);
  return f;
}

FunctionSpec FunctionSpec::coordinate_square(int k) {
  FunctionSpec f;
  f.kind = Kind::coordinate_square;
  f.index = k;
  f.name = "x" + std::to_string(k) + "^2";
  return f;
}

FunctionSpec FunctionSpec::linear(Vector a) {
  FunctionSpec f;
  f.kind = Kind::linear;
  f.a = std::move(a);
  f.name = "linear";
  return f;
}

FunctionSpec FunctionSpec::exp_linear(Vector a) {
  FunctionSpec f;
  f.kind = Kind::exp_linear;
  f.a = std::move(a);
  f.name = "exp-linear";
  return f;
}

FunctionSpec FunctionSpec::external(std::function<double(const Vector&)> fn,
                                    std::string name) {
  FunctionSpec f;
  f.kind = Kind::external;
  f.fn = std::move(fn);
  f.name = std::move(name);
  return f;
}

double FunctionSpec::operator()(const Vector& x) const {
  switch (kind) {
    case Kind::coordinate:
      return x(index);
    case Kind::coordinate_square:
      return x(index) * x(index);
    case Kind::linear:
      return a.dot(x);
    case Kind::exp_linear:
      return std::exp(a.dot(x));
    case Kind::external:
      return fn(x);
  }
  throw NumericalError("FunctionSpec: unknown kind");
}

std::function<double(const Vector&)> FunctionSpec::evaluator() const {
  FunctionSpec copy = *this;
  return [copy](const Vector& x) { return copy(x); };
}

double analytic_expectation(const GaussianProposal& q, const FunctionSpec& F) {
  switch (F.kind) {
    case FunctionSpec::Kind::coordinate:
      return q.mu(F.index);
    case FunctionSpec::Kind::coordinate_square:
      // mu_k^2 + (L L^T)_kk, the latter being the squared k-th row of L.
      return q.mu(F.index) * q.mu(F.index) +
             q.L.matrix().row(F.index).squaredNorm();
    case FunctionSpec::Kind::linear:
      return F.a.dot(q.mu);
    case FunctionSpec::Kind::exp_linear: {
      const Vector lt_a = q.L.matrix().transpose() * F.a;
      return std::exp(F.a.dot(q.mu) + 0.5 * lt_a.squaredNorm());
    }
    case FunctionSpec::Kind::external:
      break;
  }
  throw UnsupportedPair("analytic_expectation: no closed form for this pair");
}

double analytic_expectation(const ScaleMixtureProposal&, const FunctionSpec&) {
  // The Gaussian-likelihood expectation is supplied by the model-selection
  // module; nothing else has a closed form under the mixture.
  throw UnsupportedPair("analytic_expectation: no closed form for this pair");
}

double gaussian_kl_to_standard(const GaussianProposal& q) {
  const double d = static_cast<double>(q.dim());
  const double trace = q.L.matrix().squaredNorm();
  return 0.5 * (q.mu.squaredNorm() + trace - d) - q.L.log_det();
}

}  // namespace vrim
