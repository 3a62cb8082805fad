#ifndef VRIM_CORE_QUADRATURE_HPP
#define VRIM_CORE_QUADRATURE_HPP

#include <cmath>
#include <cstdint>
#include <limits>

#include "vrim/core/errors.hpp"

namespace vrim {

namespace detail {

// Gauss-Kronrod 15/7 pair on [-1, 1] (QUADPACK dqk15 constants).
inline constexpr double kGk15X[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kGk15W[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kG7W[4] = {0.1294849661688697, 0.2797053914892767,
                                   0.3818300505051189, 0.4179591836734694};

template <class F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = kGk15W[7] * f(c);
  double resg = kG7W[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double x = h * kGk15X[i];
    const double fsum = f(c - x) + f(c + x);
    resk += kGk15W[i] * fsum;
    if (i % 2 == 1) resg += kG7W[i / 2] * fsum;
  }
  kronrod = resk * h;
  err = std::abs((resk - resg) * h);
}

// Fixed-order rule per panel, recursive bisection, error budget halved per
// split; depth is capped at 60 and the total subdivision count bounded.
template <class F>
double adapt(const F& f, double a, double b, double tol, int depth,
             std::int64_t& splits_left) {
  double val, err;
  gk15(f, a, b, val, err);
  if (err <= tol || !(std::isfinite(val))) {
    if (!std::isfinite(val))
      throw QuadratureError("quadrature_1d: non-finite panel value");
    return val;
  }
  // An endpoint cusp can demand panels below double resolution; at that
  // point the remaining true error is of the panel's own scale.
  if (b - a <= 0x1.0p-50 * (std::abs(a) + std::abs(b) + 1.0)) return val;
  if (depth >= 60)
    throw QuadratureError("quadrature_1d: did not converge (max depth)");
  if (--splits_left < 0)
    throw QuadratureError("quadrature_1d: did not converge (max subdivisions)");
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth + 1, splits_left) +
         adapt(f, m, b, 0.5 * tol, depth + 1, splits_left);
}

}  // namespace detail

namespace detail {

// A fixed initial partition guards against features narrower than the node
// spacing of a single panel over the whole interval.
template <class F>
double adapt_partitioned(const F& f, double lo, double hi, double tol) {
  constexpr int kInitial = 16;
  std::int64_t splits_left = 1 << 18;
  const double width = (hi - lo) / kInitial;
  const double panel_tol = tol / kInitial;
  double total = 0.0;
  for (int i = 0; i < kInitial; ++i)
    total += adapt(f, lo + i * width, lo + (i + 1) * width, panel_tol, 0,
                   splits_left);
  return total;
}

}  // namespace detail

// Adaptive integral of f over [lo, hi] with absolute error budget tol.
// hi may be +infinity; the tail is folded in through g = lo + u/(1-u).
template <class F>
double quadrature_1d(const F& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw QuadratureError("quadrature_1d: tol must be positive");
  if (std::isinf(hi)) {
    auto g = [&](double u) {
      const double w = 1.0 - u;
      // nodes can round onto u = 1; an integrable transformed integrand
      // vanishes there
      if (w <= 0.0) return 0.0;
      return f(lo + u / w) / (w * w);
    };
    return detail::adapt_partitioned(g, 0.0, 1.0, tol);
  }
  if (!(lo < hi)) {
    if (lo == hi) return 0.0;
    throw QuadratureError("quadrature_1d: lo must be below hi");
  }
  return detail::adapt_partitioned(f, lo, hi, tol);
}

}  // namespace vrim

#endif
