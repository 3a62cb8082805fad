#ifndef VRIM_CHAIN_HPP
#define VRIM_CHAIN_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vrim/adaptation.hpp"
#include "vrim/core/parallel.hpp"
#include "vrim/proposals.hpp"
#include "vrim/targets.hpp"

namespace vrim {

// One transition of the independent Metropolis chain with every log density
// cached, so estimators never re-evaluate.
struct StepRecord {
  Vector x, y;
  double alpha = 0.0;
  bool accepted = false;
  double log_f_x = 0.0, log_f_y = 0.0, log_q_x = 0.0, log_q_y = 0.0;
};

// Contiguous run of records generated under one proposal, with the proposal
// expectations of the tracked functions.
struct BatchInfo {
  std::optional<GaussianProposal> proposal;
  std::size_t begin = 0, end = 0;
  std::vector<double> eq_f;
};

struct TrajectoryMeta {
  std::uint64_t seed = 0, stream = 0;
  std::string target_id;
  std::size_t burn_in = 0;
};

struct Trajectory {
  std::vector<StepRecord> records;
  std::vector<BatchInfo> batches;
  TrajectoryMeta meta;

  std::size_t size() const { return records.size(); }
  double acceptance_rate() const;
};

// alpha = min(1, exp{(log_f_y + log_q_x) - (log_f_x + log_q_y)}) with the
// convention alpha = 1 when exp{f(x)} q(y) = 0.
double acceptance_prob(double log_f_x, double log_f_y, double log_q_x,
                       double log_q_y);

void dump_trajectory_csv(const Trajectory& traj,
                         const std::filesystem::path& file);

namespace detail {

inline std::optional<GaussianProposal> snapshot_of(const GaussianProposal& q) {
  return q;
}
template <class Proposal>
std::optional<GaussianProposal> snapshot_of(const Proposal&) {
  return std::nullopt;
}

// First accepted q-draw against a q-drawn reference state.
template <class Proposal>
std::pair<Vector, double> init_state(const TargetModel& target,
                                     const Proposal& q, RngStream& rng) {
  auto [x, z0] = q.sample(rng);
  const double log_f_x = target.log_density(x);
  const double log_q_x = q.logpdf(x);
  for (std::int64_t attempt = 0; attempt < 1000000; ++attempt) {
    auto [y, z] = q.sample(rng);
    const double log_f_y = target.log_density(y);
    const double log_q_y = q.logpdf(y);
    const double alpha = acceptance_prob(log_f_x, log_f_y, log_q_x, log_q_y);
    if (rng.uniform_co() < alpha) return {std::move(y), log_f_y};
  }
  throw InitializationTimeout(
      "run_chain: no acceptance in 1e6 initial draws (proposal/target mismatch)");
}

}  // namespace detail

// Plain IM run: n post-burn-in records under a fixed proposal, single batch.
template <class Proposal>
Trajectory run_chain(const TargetModel& target, const Proposal& q, int n,
                     int burn_in, RngStream& rng) {
  if (n < 1) throw NumericalError("run_chain: n must be >= 1");
  const int total = n + burn_in;
  auto [x, log_f_x] = detail::init_state(target, q, rng);
  double log_q_x = q.logpdf(x);

  Trajectory traj;
  traj.records.reserve(n);
  traj.meta.seed = rng.seed();
  traj.meta.stream = rng.stream_id();
  traj.meta.target_id = target.id;
  traj.meta.burn_in = static_cast<std::size_t>(burn_in);

  constexpr int kBlock = 256;
  std::vector<Vector> ys(kBlock);
  std::vector<double> lqy(kBlock), lfy(kBlock);
  int done = 0;
  while (done < total) {
    const int b = std::min(kBlock, total - done);
    for (int j = 0; j < b; ++j) {
      ys[j] = q.sample(rng).first;
      lqy[j] = q.logpdf(ys[j]);
    }
    if (target.stateful) {
      for (int j = 0; j < b; ++j) lfy[j] = target.log_density(ys[j]);
    } else {
      std::exception_ptr err;
      par::parallel_for(b, [&](std::int64_t j) {
        try {
          lfy[j] = target.log_density(ys[j]);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
          if (!err) err = std::current_exception();
        }
      });
      if (err) std::rethrow_exception(err);
    }
    for (int j = 0; j < b; ++j) {
      StepRecord rec;
      rec.x = x;
      rec.y = ys[j];
      rec.log_f_x = log_f_x;
      rec.log_f_y = lfy[j];
      rec.log_q_x = log_q_x;
      rec.log_q_y = lqy[j];
      rec.alpha = acceptance_prob(log_f_x, lfy[j], log_q_x, lqy[j]);
      rec.accepted = rng.uniform_co() < rec.alpha;
      if (rec.accepted) {
        x = ys[j];
        log_f_x = lfy[j];
        log_q_x = lqy[j];
      }
      if (done + j >= burn_in) traj.records.push_back(std::move(rec));
    }
    done += b;
  }

  BatchInfo batch;
  batch.proposal = detail::snapshot_of(q);
  batch.begin = 0;
  batch.end = traj.records.size();
  traj.batches.push_back(std::move(batch));
  return traj;
}

struct AdaptTraceRow {
  int batch = 0;
  double acceptance_rate = 0.0;
  double mu_norm = 0.0;
  double log_det_L = 0.0;
  double kl_to_standard = std::numeric_limits<double>::quiet_NaN();
};

struct BatchedRun {
  Trajectory trajectory;
  GaussianProposal final_proposal;
  std::vector<AdaptTraceRow> trace;
};

// Batch-adaptive runner: l recorded batches of size B; after every batch the
// averaged KL gradient updates the proposal and the chain state carries
// over.  Burn-in batches adapt without being recorded.
BatchedRun run_chain_batched(const TargetModel& target, GaussianProposal q0,
                             const AdaptationConfig& cfg,
                             const std::vector<FunctionSpec>& tracked,
                             RngStream& rng);

}  // namespace vrim

#endif
