#include "vrim/core/distributions.hpp"

#include <cmath>

namespace vrim {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

double mvn_logpdf(const Vector& x, const Vector& mu, const CholeskyFactor& L) {
  if (x.size() != mu.size() || x.size() != L.dim())
    throw DimensionMismatch("mvn_logpdf: dimension mismatch");
  const Vector z = L.solve_lower(x - mu);
  return -0.5 * static_cast<double>(x.size()) * kLog2Pi - L.log_det() -
         0.5 * z.squaredNorm();
}

std::pair<Vector, Vector> mvn_sample_reparam(const Vector& mu,
                                             const CholeskyFactor& L,
                                             RngStream& rng) {
  const int d = L.dim();
  Vector z(d);
  for (int i = 0; i < d; ++i) z(i) = rng.normal();
  Vector y = mu + L.matrix().triangularView<Eigen::Lower>() * z;
  return {std::move(y), std::move(z)};
}

double studentt_logpdf(double x, double nu) {
  if (!(nu > 0.0)) throw NumericalError("studentt_logpdf: nu must be positive");
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI) -
         0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double studentt_sample(double nu, RngStream& rng) { return rng.student_t(nu); }

}  // namespace vrim
