#include "vrim/targets.hpp"

#include <cmath>
#include <limits>

#include "vrim/core/parallel.hpp"

namespace vrim {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double t) {
  // log(1 + e^t) without overflow.
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

}  // namespace

TargetModel std_gaussian_target(int d) {
  TargetModel t;
  t.dim = d;
  t.id = "std-gaussian-" + std::to_string(d);
  t.log_density = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  t.grad_log_density = [](const Vector& x) { return Vector(-x); };
  return t;
}

TargetModel gaussian_target(const Vector& mu, const CholeskyFactor& L) {
  TargetModel t;
  t.dim = static_cast<int>(mu.size());
  t.id = "gaussian-" + std::to_string(t.dim);
  const double logdet = L.log_det();
  Matrix Lm = L.matrix();
  t.log_density = [mu, Lm, logdet](const Vector& x) {
    const Vector z = Lm.triangularView<Eigen::Lower>().solve(x - mu);
    return -0.5 * static_cast<double>(x.size()) * kLog2Pi - logdet -
           0.5 * z.squaredNorm();
  };
  t.grad_log_density = [mu, Lm](const Vector& x) {
    const Vector z = Lm.triangularView<Eigen::Lower>().solve(x - mu);
    Vector g = Lm.transpose().triangularView<Eigen::Upper>().solve(z);
    return Vector(-g);
  };
  return t;
}

TargetModel logistic_posterior(const LogisticData& data,
                               double prior_variance) {
  if (!(prior_variance > 0.0))
    throw NumericalError("logistic_posterior: prior variance must be positive");
  const auto X = std::make_shared<Matrix>(data.X);
  const auto y = std::make_shared<Vector>(data.y);
  const double inv_v = 1.0 / prior_variance;
  const auto N = X->rows();

  TargetModel t;
  t.dim = static_cast<int>(X->cols());
  t.id = "logistic-" + std::to_string(t.dim);
  t.log_density = [X, y, inv_v, N](const Vector& beta) {
    const Vector eta = (*X) * beta;
    // y log s + (1-y) log(1-s) = y*eta - softplus(eta)
    const double loglik = par::chunked_sum(N, [&](std::int64_t i) {
      return (*y)(i)*eta(i) - softplus(eta(i));
    });
    return loglik - 0.5 * inv_v * beta.squaredNorm();
  };
  t.grad_log_density = [X, y, inv_v, N](const Vector& beta) {
    const Vector eta = (*X) * beta;
    Vector resid(N);
    par::parallel_for(N, [&](std::int64_t i) {
      const double s = 1.0 / (1.0 + std::exp(-eta(i)));
      resid(i) = (*y)(i)-s;
    });
    return Vector(X->transpose() * resid - inv_v * beta);
  };
  return t;
}

TargetModel gp_hyper_posterior(const GpData& data, double prior_variance) {
  if (!(prior_variance > 0.0))
    throw NumericalError("gp_hyper_posterior: prior variance must be positive");
  const auto N = data.X.rows();
  // Squared distances are fixed; only the kernel amplitudes move.
  auto sqdist = std::make_shared<Matrix>(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d2 = (data.X.row(i) - data.X.row(j)).squaredNorm();
      (*sqdist)(i, j) = d2;
      (*sqdist)(j, i) = d2;
    }
  const auto y = std::make_shared<Vector>(data.y);
  const double inv_v = 1.0 / prior_variance;

  // x = (log s2, log sf2, log l2)
  auto build = [sqdist, N](const Vector& x, Matrix& K) {
    const double s2 = std::exp(x(0));
    const double sf2 = std::exp(x(1));
    const double l2 = std::exp(x(2));
    K.resize(N, N);
    par::parallel_for(N, [&](std::int64_t i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        double v = sf2 * std::exp(-0.5 * (*sqdist)(i, j) / l2);
        if (i == j) v += s2;
        K(i, j) = v;
        K(j, i) = v;
      }
    });
  };

  auto value = [y, N, inv_v, build](const Vector& x) {
    Matrix K;
    build(x, K);
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("gp_hyper_posterior: kernel matrix not PD");
    Matrix Lm = llt.matrixL();
    const Vector alpha = llt.solve(*y);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) logdet += std::log(Lm(i, i));
    const double loglik = -0.5 * static_cast<double>(N) * kLog2Pi - logdet -
                          0.5 * y->dot(alpha);
    const double logprior =
        -1.5 * (kLog2Pi - std::log(inv_v)) - 0.5 * inv_v * x.squaredNorm();
    return loglik + logprior;
  };

  auto value_and_grad =
      [y, sqdist, N, inv_v, build](const Vector& x) -> std::pair<double, Vector> {
    const double s2 = std::exp(x(0));
    const double l2 = std::exp(x(2));
    Matrix K;
    build(x, K);
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("gp_hyper_posterior: kernel matrix not PD");
    Matrix Lm = llt.matrixL();
    const Vector alpha = llt.solve(*y);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) logdet += std::log(Lm(i, i));
    const double loglik = -0.5 * static_cast<double>(N) * kLog2Pi - logdet -
                          0.5 * y->dot(alpha);
    const double logprior =
        -1.5 * (kLog2Pi - std::log(inv_v)) - 0.5 * inv_v * x.squaredNorm();

    const Matrix Kinv = llt.solve(Matrix::Identity(N, N));
    // dK/dtheta: identity for s2, the noise-free kernel over sf2 for sf2,
    // and E .* D / (2 l2^2) for l2; each chain-ruled by theta_j into log
    // space through the factor theta_j.
    const Matrix E = K - s2 * Matrix::Identity(N, N);
    Vector grad(3);
    const double quad_s2 = alpha.squaredNorm();
    const double tr_s2 = Kinv.trace();
    grad(0) = s2 * 0.5 * (quad_s2 - tr_s2);

    const double quad_sf2 = alpha.dot(E * alpha);
    const double tr_sf2 = (Kinv.cwiseProduct(E)).sum();
    grad(1) = 0.5 * (quad_sf2 - tr_sf2);  // sf2 * d/dsf2 absorbs the 1/sf2

    const Matrix ED = E.cwiseProduct(*sqdist);
    const double quad_l2 = alpha.dot(ED * alpha) / (2.0 * l2);
    const double tr_l2 = (Kinv.cwiseProduct(ED)).sum() / (2.0 * l2);
    grad(2) = 0.5 * (quad_l2 - tr_l2);

    grad -= inv_v * x;
    return {loglik + logprior, grad};
  };

  TargetModel t;
  t.dim = 3;
  t.id = "gp-hyper";
  t.log_density = value;
  t.value_and_grad = value_and_grad;
  t.grad_log_density = [value_and_grad](const Vector& x) {
    return value_and_grad(x).second;
  };
  return t;
}

double gprior_inverse_cdf(double u) { return u / (1.0 - u); }

TargetModel gprior_pseudo_marginal(const Matrix& xtx, int mc_samples,
                                   std::shared_ptr<RngStream> aux) {
  if (mc_samples < 1)
    throw NumericalError("gprior_pseudo_marginal: mc_samples must be >= 1");
  const auto chol = std::make_shared<CholeskyFactor>(chol_decompose(xtx));
  const double logdet_xtx = chol->log_det();  // half of log|X^T X|
  const double d = static_cast<double>(xtx.rows());

  TargetModel t;
  t.dim = static_cast<int>(xtx.rows());
  t.id = "gprior-pm-" + std::to_string(t.dim);
  t.stateful = true;
  t.log_density = [chol, logdet_xtx, d, mc_samples, aux](const Vector& beta) {
    const double quad =
        (chol->matrix().transpose().triangularView<Eigen::Upper>() * beta)
            .squaredNorm();
    double max_term = -std::numeric_limits<double>::infinity();
    Vector terms(mc_samples);
    for (int i = 0; i < mc_samples; ++i) {
      const double g = gprior_inverse_cdf(aux->uniform_oo());
      terms(i) = -0.5 * d * (kLog2Pi + std::log(g)) + logdet_xtx -
                 0.5 * quad / g;
      max_term = std::max(max_term, terms(i));
    }
    double s = 0.0;
    for (int i = 0; i < mc_samples; ++i) s += std::exp(terms(i) - max_term);
    return max_term + std::log(s) - std::log(static_cast<double>(mc_samples));
  };
  return t;
}

}  // namespace vrim
