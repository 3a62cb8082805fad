#ifndef VRIM_CORE_DISTRIBUTIONS_HPP
#define VRIM_CORE_DISTRIBUTIONS_HPP

#include <utility>

#include "vrim/core/linalg.hpp"
#include "vrim/core/rng.hpp"

namespace vrim {

// log N(x | mu, L L^T), evaluated entirely in log space.
double mvn_logpdf(const Vector& x, const Vector& mu, const CholeskyFactor& L);

// Reparametrised draw y = mu + L z; z is returned so gradient estimators can
// reuse it.
std::pair<Vector, Vector> mvn_sample_reparam(const Vector& mu,
                                             const CholeskyFactor& L,
                                             RngStream& rng);

// log density of the standard Student-t with nu degrees of freedom.
double studentt_logpdf(double x, double nu);

double studentt_sample(double nu, RngStream& rng);

}  // namespace vrim

#endif
