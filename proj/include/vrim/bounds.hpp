#ifndef VRIM_BOUNDS_HPP
#define VRIM_BOUNDS_HPP

#include <cstdint>

#include "vrim/core/rng.hpp"

namespace vrim {

// Asymptotic-variance upper bound for the 1-D control-variate estimator with
// F(x) = x, target N(0,1), evaluated as
//   2 w*^2 E_{q,q}[(alpha-1)^2 (y-x)^2] - E_{pi,q}[(alpha-1)^2 (y-x)^2].
// log10_vrf_lower = -log10(bound) is the implied lower bound on the variance
// reduction factor against i.i.d. sampling (sigma_F^2 = 1).
struct BoundResult {
  double bound = 0.0;
  double se = 0.0;  // Monte Carlo standard error; 0 for quadrature results
  double log10_vrf_lower = 0.0;
};

// Gaussian proposal N(0, sigma2): nested adaptive quadrature of the explicit
// double integral.  Only defined for sigma2 >= 1 (below that the weight
// ratio sup pi/q is infinite); sigma2 = 1 gives exactly zero.
BoundResult bound_1d_gaussian(double sigma2, double tol);

// Monte Carlo version of the same double integral; the oracle the quadrature
// is checked against.
BoundResult bound_1d_gaussian_mc(double sigma2, std::int64_t n_mc,
                                 RngStream& rng);

// sup_x pi(x)/t_nu(x), attained at |x| = 1.
double student_t_wstar(double nu);

// Student-t proposal with nu degrees of freedom: Monte Carlo estimate of the
// bound from draws of the proposal and the target.
BoundResult bound_1d_student_t(double nu, std::int64_t n_mc, RngStream& rng);

}  // namespace vrim

#endif
