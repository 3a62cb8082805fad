#ifndef VRIM_EXPERIMENTS_HPP
#define VRIM_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vrim/adaptation.hpp"

namespace vrim {

enum class ExperimentKind {
  oned_gauss,
  oned_t,
  gauss_d,
  modelselect,
  logreg,
  gp,
  bounds
};

ExperimentKind experiment_kind_from_name(const std::string& name);
std::string to_string(ExperimentKind kind);

// Everything a run needs; per-kind defaults fill unset (0 / empty) fields.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::oned_gauss;
  std::uint64_t seed = 1;
  int replicas = 0;
  int threads = 1;
  std::filesystem::path out_dir = "out";
  std::filesystem::path data_dir = "data";
  std::string dataset;

  int n = 0;           // samples per replica
  int burn_in = 0;     // plain-chain burn-in records

  // adaptive runs
  int batch_size = 50;
  int n_batches = 0;          // recorded batches in `during` mode
  int adapt_batches = 1000;   // adaptation updates before collection
  std::string grad_kind;      // "dsvi" | "stl"
  double step_mu = 0.0;       // 0 -> default
  double step_l = 0.0;
  double decay_tau = 350.0;   // 0 disables the step decay
  double decay_kappa = 0.85;
  std::string mode = "after";  // "after" | "during"

  int dim = 10;  // gauss-d

  std::vector<double> sigma2_grid{1.1, 1.5, 2.0, 3.0};
  std::vector<double> nu_grid{5.0, 10.0, 20.0, 50.0};

  int mixture_k = 4;      // modelselect
  int pm_samples = 100;

  int gp_subsample = 0;  // 0 = full dataset

  double bound_tol = 1e-6;
  std::int64_t bound_mc = 1000000;
};

// key = value text, one key per line, '#' comments; unknown keys are config
// errors.  Flags override file values in the CLI.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& file);

// Fill per-kind defaults and check the invariants (replicas >= 2 for VRF
// output, n = l * B for batched runs).  Throws ConfigError.
void finalize_config(ExperimentConfig& cfg);

// Run the experiment, writing summary.csv, replicas.jsonl and (for adaptive
// runs) trace.csv under cfg.out_dir.
void run_experiment(const ExperimentConfig& cfg);

// Per-replica fan-out with stream ids 0..count-1 off the master seed; jobs
// that throw leave their slot empty and are reported by the caller.
struct ReplicaFailure {
  int replica = 0;
  std::uint64_t stream = 0;
  std::string message;
};

}  // namespace vrim

#endif
