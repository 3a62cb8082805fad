#include "vrim/chain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace vrim {

double acceptance_prob(double log_f_x, double log_f_y, double log_q_x,
                       double log_q_y) {
  if (std::isnan(log_f_x) || std::isnan(log_f_y) || std::isnan(log_q_x) ||
      std::isnan(log_q_y))
    throw NumericalError("acceptance_prob: NaN input");
  // exp{f(x)} q(y) = 0 forces acceptance.
  if (std::isinf(log_f_x + log_q_y) && (log_f_x + log_q_y) < 0.0) return 1.0;
  const double delta = (log_f_y + log_q_x) - (log_f_x + log_q_y);
  if (delta >= 0.0) return 1.0;
  return std::exp(delta);
}

double Trajectory::acceptance_rate() const {
  if (records.empty()) return 0.0;
  std::size_t acc = 0;
  for (const StepRecord& r : records) acc += r.accepted ? 1 : 0;
  return static_cast<double>(acc) / static_cast<double>(records.size());
}

void dump_trajectory_csv(const Trajectory& traj,
                         const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw NumericalError("dump_trajectory_csv: cannot write " +
                                 file.string());
  const int d = traj.records.empty() ? 0
                                     : static_cast<int>(traj.records[0].x.size());
  out << "step,accepted,alpha";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  for (int j = 0; j < d; ++j) out << ",y" << j;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const StepRecord& r = traj.records[i];
    std::snprintf(buf, sizeof buf, "%.17g", r.alpha);
    out << i << "," << (r.accepted ? 1 : 0) << "," << buf;
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r.x(j));
      out << "," << buf;
    }
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r.y(j));
      out << "," << buf;
    }
    out << "\n";
  }
}

BatchedRun run_chain_batched(const TargetModel& target, GaussianProposal q0,
                             const AdaptationConfig& cfg,
                             const std::vector<FunctionSpec>& tracked,
                             RngStream& rng) {
  if (cfg.batch_size < 1 || cfg.n_batches < 1 || cfg.burn_in_batches < 0)
    throw NumericalError("run_chain_batched: bad batch configuration");
  if (!target.has_gradient() && !target.value_and_grad)
    throw GradientUnavailable("run_chain_batched: target has no gradient");
  for (const FunctionSpec& f : tracked)
    analytic_expectation(q0, f);  // fail fast on unsupported pairs

  const int B = cfg.batch_size;
  const int total_batches = cfg.burn_in_batches + cfg.n_batches;
  const int d = q0.dim();

  GaussianProposal q = std::move(q0);
  const int n_flat = d * (d + 1) / 2;
  AdamState mu_state(d, cfg.adam_mu);
  AdamState L_state(n_flat, cfg.adam_L);

  auto [x, log_f_x] = detail::init_state(target, q, rng);
  double log_q_x = q.logpdf(x);

  BatchedRun run{Trajectory{}, q, {}};
  Trajectory& traj = run.trajectory;
  traj.records.reserve(static_cast<std::size_t>(cfg.n_batches) * B);
  traj.meta.seed = rng.seed();
  traj.meta.stream = rng.stream_id();
  traj.meta.target_id = target.id;
  traj.meta.burn_in = static_cast<std::size_t>(cfg.burn_in_batches) *
                      static_cast<std::size_t>(B);
  run.trace.reserve(total_batches);

  std::vector<ProposalDraw> draws(B);
  std::vector<double> lfy(B), lqy(B);

  for (int batch = 0; batch < total_batches; ++batch) {
    for (int j = 0; j < B; ++j) {
      auto [y, z] = q.sample(rng);
      draws[j].y = std::move(y);
      draws[j].z = std::move(z);
      lqy[j] = q.logpdf(draws[j].y);
    }
    {
      std::exception_ptr err;
      par::parallel_for(B, [&](std::int64_t j) {
        try {
          auto [value, grad] = target.eval_with_grad(draws[j].y);
          lfy[j] = value;
          draws[j].grad_log_pi = std::move(grad);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
          if (!err) err = std::current_exception();
        }
      });
      if (err) std::rethrow_exception(err);
    }

    const bool record = batch >= cfg.burn_in_batches;
    const std::size_t begin = traj.records.size();
    int accepted = 0;
    for (int j = 0; j < B; ++j) {
      StepRecord rec;
      rec.x = x;
      rec.y = draws[j].y;
      rec.log_f_x = log_f_x;
      rec.log_f_y = lfy[j];
      rec.log_q_x = log_q_x;
      rec.log_q_y = lqy[j];
      rec.alpha = acceptance_prob(log_f_x, lfy[j], log_q_x, lqy[j]);
      rec.accepted = rng.uniform_co() < rec.alpha;
      if (rec.accepted) {
        x = draws[j].y;
        log_f_x = lfy[j];
        log_q_x = lqy[j];
        ++accepted;
      }
      if (record) traj.records.push_back(std::move(rec));
    }

    if (record) {
      BatchInfo info;
      info.proposal = q;
      info.begin = begin;
      info.end = traj.records.size();
      info.eq_f.reserve(tracked.size());
      for (const FunctionSpec& f : tracked)
        info.eq_f.push_back(analytic_expectation(q, f));
      traj.batches.push_back(std::move(info));
    }

    AdaptTraceRow row;
    row.batch = batch;
    row.acceptance_rate = static_cast<double>(accepted) / B;
    row.mu_norm = q.mu.norm();
    row.log_det_L = q.L.log_det();
    if (cfg.track_kl_to_standard) row.kl_to_standard = gaussian_kl_to_standard(q);
    run.trace.push_back(row);

    try {
      GaussianProposal next =
          batch_update(q, std::span<const ProposalDraw>(draws.data(), draws.size()),
                       cfg.gradient, mu_state, L_state);
      q = std::move(next);
      // The carried state's proposal density must follow the new proposal.
      log_q_x = q.logpdf(x);
    } catch (const NonFiniteGradient& e) {
      throw NonFiniteGradient(std::string(e.what()) + " (batch " +
                              std::to_string(batch) + ")");
    }
  }
  run.final_proposal = q;
  return run;
}

}  // namespace vrim
