#include "vrim/adaptation.hpp"

#include <cmath>

#include "vrim/core/parallel.hpp"

namespace vrim {

namespace {

void check_finite(const KlGradient& g) {
  if (!g.g_mu.allFinite() || !g.g_L.allFinite())
    throw NonFiniteGradient("KL gradient is not finite");
}

Matrix lower_outer(const Vector& a, const Vector& z) {
  const auto d = a.size();
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out(i, j) = a(i) * z(j);
  return out;
}

}  // namespace

KlGradient kl_grad_dsvi(const GaussianProposal& q, const Vector& grad_log_pi,
                        const Vector& z) {
  KlGradient g;
  g.g_mu = -grad_log_pi;
  g.g_L = lower_outer(-grad_log_pi, z);
  for (int i = 0; i < q.dim(); ++i) g.g_L(i, i) -= 1.0 / q.L.matrix()(i, i);
  check_finite(g);
  return g;
}

KlGradient kl_grad_dsvi(const TargetModel& target, const GaussianProposal& q,
                        const Vector& y, const Vector& z) {
  if (!target.has_gradient())
    throw GradientUnavailable("kl_grad_dsvi: target has no gradient");
  return kl_grad_dsvi(q, target.grad_log_density(y), z);
}

KlGradient kl_grad_stl(const GaussianProposal& q, const Vector& grad_log_pi,
                       const Vector& z) {
  // grad_y log q(y) = -(L L^T)^{-1} (y - mu) = -L^{-T} z
  const Vector score = -q.L.solve_upper_t(z);
  const Vector diff = grad_log_pi - score;
  KlGradient g;
  g.g_mu = -diff;
  g.g_L = lower_outer(-diff, z);
  check_finite(g);
  return g;
}

KlGradient kl_grad_stl(const TargetModel& target, const GaussianProposal& q,
                       const Vector& y, const Vector& z) {
  if (!target.has_gradient())
    throw GradientUnavailable("kl_grad_stl: target has no gradient");
  return kl_grad_stl(q, target.grad_log_density(y), z);
}

Vector adam_step(AdamState& state, const Vector& grad) {
  if (!grad.allFinite()) throw NonFiniteGradient("adam_step: non-finite gradient");
  if (grad.size() != state.m.size())
    throw DimensionMismatch("adam_step: gradient size mismatch");
  const AdamParams& p = state.params;
  state.t += 1;
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * grad;
  state.v = p.beta2 * state.v + (1.0 - p.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.t));
  const double step = p.step_at(state.t - 1);
  Vector delta(grad.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double mhat = state.m(i) / bc1;
    const double vhat = state.v(i) / bc2;
    delta(i) = -step * mhat / (std::sqrt(vhat) + p.eps);
  }
  return delta;
}

namespace detail {

Vector flatten_lower(const Matrix& L) {
  const auto d = L.rows();
  Vector out(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out(k++) = L(i, j);
  return out;
}

void unflatten_lower_add(Matrix& L, const Vector& delta) {
  const auto d = L.rows();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) L(i, j) += delta(k++);
}

}  // namespace detail

GaussianProposal batch_update(const GaussianProposal& q,
                              std::span<const ProposalDraw> batch,
                              GradEstimator kind, AdamState& mu_state,
                              AdamState& L_state) {
  const int d = q.dim();
  const auto B = static_cast<std::int64_t>(batch.size());
  if (B == 0) throw NumericalError("batch_update: empty batch");

  // Average the single-draw gradients in record order.
  Vector g_mu = Vector::Zero(d);
  Matrix g_L = Matrix::Zero(d, d);
  std::vector<KlGradient> grads(batch.size());
  par::parallel_for(B, [&](std::int64_t j) {
    const ProposalDraw& draw = batch[static_cast<std::size_t>(j)];
    grads[static_cast<std::size_t>(j)] =
        kind == GradEstimator::dsvi
            ? kl_grad_dsvi(q, draw.grad_log_pi, draw.z)
            : kl_grad_stl(q, draw.grad_log_pi, draw.z);
  });
  for (const KlGradient& g : grads) {
    g_mu += g.g_mu;
    g_L += g.g_L;
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  g_mu *= inv_b;
  g_L *= inv_b;

  Vector new_mu = q.mu + adam_step(mu_state, g_mu);
  Matrix new_L = q.L.matrix();
  detail::unflatten_lower_add(new_L, adam_step(L_state, detail::flatten_lower(g_L)));
  for (int i = 0; i < d; ++i)
    if (new_L(i, i) < 1e-8) new_L(i, i) = 1e-8;
  return GaussianProposal(std::move(new_mu), CholeskyFactor(std::move(new_L)));
}

}  // namespace vrim
