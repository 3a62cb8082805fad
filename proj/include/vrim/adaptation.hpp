#ifndef VRIM_ADAPTATION_HPP
#define VRIM_ADAPTATION_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vrim/proposals.hpp"
#include "vrim/targets.hpp"

namespace vrim {

enum class GradEstimator { dsvi, stl };

// Single-draw estimate of the KL(q || pi) gradient in (mu, L); g_L is lower
// triangular with the upper triangle exactly zero.
struct KlGradient {
  Vector g_mu;
  Matrix g_L;
};

// Reparametrisation gradient with the proposal's score kept: the entropy
// term enters through its exact derivative diag(1/L_kk).
KlGradient kl_grad_dsvi(const TargetModel& target, const GaussianProposal& q,
                        const Vector& y, const Vector& z);
// As above with a precomputed gradient of the target at y.
KlGradient kl_grad_dsvi(const GaussianProposal& q, const Vector& grad_log_pi,
                        const Vector& z);

// Score term removed; the single-draw gradient vanishes identically at
// q = pi rather than only in expectation.
KlGradient kl_grad_stl(const TargetModel& target, const GaussianProposal& q,
                       const Vector& y, const Vector& z);
KlGradient kl_grad_stl(const GaussianProposal& q, const Vector& grad_log_pi,
                       const Vector& z);

struct AdamParams {
  double step = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Robbins-Monro style decay of the step size sequence:
  // step_t = step / (1 + t/decay_tau)^decay_kappa, disabled when tau <= 0.
  double decay_tau = 0.0;
  double decay_kappa = 0.6;

  double step_at(long t) const {
    if (decay_tau <= 0.0) return step;
    return step / std::pow(1.0 + static_cast<double>(t) / decay_tau,
                           decay_kappa);
  }
};

struct AdamState {
  Vector m, v;
  long t = 0;
  AdamParams params;

  explicit AdamState(int n, AdamParams p = {})
      : m(Vector::Zero(n)), v(Vector::Zero(n)), params(p) {}
};

// Standard bias-corrected update; returns the parameter delta
// -step * mhat / (sqrt(vhat) + eps) and advances the state.
Vector adam_step(AdamState& state, const Vector& grad);

// One proposed point with its reparametrisation noise and the target
// gradient evaluated there; the unit a batch update consumes.
struct ProposalDraw {
  Vector y, z;
  Vector grad_log_pi;
};

// Averages the per-draw KL gradients over a batch, takes one Adam step for
// mu and one for L, and returns the proposal for the next batch.  The
// diagonal of L is clamped below at 1e-8.
GaussianProposal batch_update(const GaussianProposal& q,
                              std::span<const ProposalDraw> batch,
                              GradEstimator kind, AdamState& mu_state,
                              AdamState& L_state);

namespace detail {
Vector flatten_lower(const Matrix& L);
void unflatten_lower_add(Matrix& L, const Vector& delta);
}  // namespace detail

struct AdaptationConfig {
  int batch_size = 50;       // B
  int n_batches = 100;       // recorded batches (l)
  int burn_in_batches = 0;   // adaptation-only batches discarded up front
  GradEstimator gradient = GradEstimator::dsvi;
  // Step sizes decay Robbins-Monro style by default so the proposal keeps
  // tightening instead of hovering at the gradient-noise floor.
  AdamParams adam_mu{0.01, 0.9, 0.999, 1e-8, 350.0, 0.85};
  AdamParams adam_L{0.005, 0.9, 0.999, 1e-8, 350.0, 0.85};
  bool track_kl_to_standard = false;  // trace diagnostic for Gaussian targets
};

}  // namespace vrim

#endif
