#ifndef VRIM_ESTIMATORS_HPP
#define VRIM_ESTIMATORS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrim/chain.hpp"

namespace vrim {

enum class EstimatorKind {
  im,
  imcv,
  imcv_approx,
  imcv_coef,
  rb,
  cim,
  cim_coef,
  batch,
  batch_coef,
  cmc
};

std::string to_string(EstimatorKind kind);

struct EstimatorReport {
  EstimatorKind kind = EstimatorKind::im;
  double value = 0.0;
  std::optional<double> c1, c2;
  std::size_t n_used = 0;
};

using ScalarFn = std::function<double(const Vector&)>;

// Ergodic average (1/n) sum F(X_i).
EstimatorReport est_im(const Trajectory& traj, const ScalarFn& F);

// Control-variate estimator:
// (1/n) sum { F(X_i) + alpha_i (F(Y_i) - F(X_i)) - (F(Y_i) - EqF) }.
EstimatorReport est_imcv(const Trajectory& traj, const ScalarFn& F, double eq_f);

// Control variate built from a surrogate F~ whose proposal expectation is
// available when E_q[F] itself is not.
EstimatorReport est_imcv_approx(const Trajectory& traj, const ScalarFn& F,
                                const ScalarFn& F_tilde, double eq_f_tilde);

// Variance-minimising coefficients; degenerate denominators raise
// DegenerateDenominator (callers default the coefficient to 1).
double fit_c2(const Trajectory& traj, const ScalarFn& F, double eq_f);
double fit_c1(const Trajectory& traj, const ScalarFn& F, double eq_f, double c2);

// est_imcv with fitted (c1, c2); falls back to 1 with a warning on
// degenerate fits.
EstimatorReport est_imcv_coef(const Trajectory& traj, const ScalarFn& F,
                              double eq_f);

// Explicit-coefficient form shared by est_imcv (c1 = c2 = 1) and
// est_imcv_coef; exposed for the identity checks.
EstimatorReport est_imcv_with_coef(const Trajectory& traj, const ScalarFn& F,
                                   double eq_f, double c1, double c2);

// Rao-Blackwellised average (1/n) sum { F(X_i) + alpha_i (F(Y_i) - F(X_i)) }.
EstimatorReport est_rb(const Trajectory& traj, const ScalarFn& F);

// Coupled-chain control variate, index shifted by one:
// (1/(n-1)) sum_{i>=2} { F(X_i) - c (F(Y_{i-1}) - EqF) }.
EstimatorReport est_cim(const Trajectory& traj, const ScalarFn& F, double eq_f,
                        bool with_coef);

// Batch estimator over an adaptively generated trajectory; per-batch
// coefficients when with_coef is set.  tracked_idx selects which recorded
// per-batch expectation E_{q_i}[F] belongs to F.
EstimatorReport est_batch(const Trajectory& traj, const ScalarFn& F,
                          std::size_t tracked_idx, bool with_coef);

// Plain average over i.i.d. draws.
EstimatorReport est_cmc(std::span<const Vector> samples, const ScalarFn& F);

// Ratio of centred sums of squares, a over b.
double vrf(std::span<const double> values_a, std::span<const double> values_b);

}  // namespace vrim

#endif
