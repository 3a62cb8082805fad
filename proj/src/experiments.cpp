#include "vrim/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrim/bounds.hpp"
#include "vrim/chain.hpp"
#include "vrim/core/parallel.hpp"
#include "vrim/datasets.hpp"
#include "vrim/estimators.hpp"
#include "vrim/model_select.hpp"

namespace vrim {

namespace {

using nlohmann::json;

// Stream-id layout: replica in the low 32 bits, grid index above, role bits
// high so jobs never collide.
constexpr std::uint64_t kRoleAdapt = 1ULL << 40;
constexpr std::uint64_t kRoleSharedAdapt = 1ULL << 41;
constexpr std::uint64_t kRoleData = 1ULL << 42;
constexpr std::uint64_t kRoleBounds = 1ULL << 43;
constexpr std::uint64_t kRoleCmc = 1ULL << 48;

std::uint64_t stream_id(int grid, int replica) {
  return (static_cast<std::uint64_t>(grid) << 32) |
         static_cast<std::uint64_t>(replica);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct EstimateRecord {
  std::string estimator;
  std::string f;
  double value = 0.0;
  std::optional<double> c1, c2;
  std::size_t n = 0;
  double acceptance = std::numeric_limits<double>::quiet_NaN();
};

using ReplicaRecords = std::vector<EstimateRecord>;

struct Block {
  std::string label;
  std::string baseline;
  std::vector<int> replica_ids;
  std::vector<std::uint64_t> streams;
  std::vector<ReplicaRecords> replicas;
  std::vector<ReplicaFailure> failures;
};

EstimateRecord from_report(const EstimatorReport& rep, const std::string& f,
                           double acc) {
  EstimateRecord r;
  r.estimator = to_string(rep.kind);
  r.f = f;
  r.value = rep.value;
  r.c1 = rep.c1;
  r.c2 = rep.c2;
  r.n = rep.n_used;
  r.acceptance = acc;
  return r;
}

// Runs `job` for replicas 0..count-1 with per-replica streams; failures are
// collected rather than fatal as long as two replicas survive.
template <class Job>
Block fanout_block(const std::string& label, const std::string& baseline,
                   int count, int grid, std::uint64_t seed, Job&& job) {
  std::vector<std::optional<ReplicaRecords>> results(count);
  std::vector<std::string> errors(count);
  par::parallel_for(count, [&](std::int64_t r) {
    try {
      results[r] = job(static_cast<int>(r));
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });
  Block block;
  block.label = label;
  block.baseline = baseline;
  for (int r = 0; r < count; ++r) {
    if (results[r]) {
      block.replica_ids.push_back(r);
      block.streams.push_back(stream_id(grid, r));
      block.replicas.push_back(std::move(*results[r]));
    } else {
      block.failures.push_back({r, stream_id(grid, r), errors[r]});
    }
  }
  for (const ReplicaFailure& f : block.failures)
    std::fprintf(stderr, "warning: %s: replica %d (stream %llu) failed: %s\n",
                 label.c_str(), f.replica,
                 static_cast<unsigned long long>(f.stream), f.message.c_str());
  if (block.replicas.size() < 2)
    throw NumericalError(label + ": fewer than two replicas survived");
  return block;
}

class OutputWriter {
 public:
  OutputWriter(const std::filesystem::path& dir, std::uint64_t seed)
      : dir_(dir), seed_(seed) {
    std::filesystem::create_directories(dir);
    summary_.open(dir / "summary.csv");
    jsonl_.open(dir / "replicas.jsonl");
    if (!summary_ || !jsonl_)
      throw NumericalError("cannot write outputs under " + dir.string());
    summary_ << "experiment,estimator,f,mean,variance,vrf,baseline,c1,c2,"
                "acceptance_rate,replicas\n";
  }

  void write_block(const Block& block) {
    const std::size_t t = block.replicas.size();
    const ReplicaRecords& first = block.replicas.front();

    for (std::size_t r = 0; r < t; ++r) {
      for (const EstimateRecord& rec : block.replicas[r]) {
        json row;
        row["kind"] = rec.estimator;
        row["value"] = std::isfinite(rec.value) ? json(rec.value)
                                                : json(fmt(rec.value));
        if (rec.c1) row["c1"] = *rec.c1;
        if (rec.c2) row["c2"] = *rec.c2;
        row["n"] = rec.n;
        row["seed"] = seed_;
        row["experiment-id"] = block.label;
        row["f"] = rec.f;
        row["replica"] = block.replica_ids[r];
        row["stream"] = block.streams[r];
        if (std::isfinite(rec.acceptance))
          row["acceptance_rate"] = rec.acceptance;
        jsonl_ << row.dump() << "\n";
      }
    }

    for (std::size_t i = 0; i < first.size(); ++i) {
      std::vector<double> values(t);
      double c1_sum = 0.0, c2_sum = 0.0, acc_sum = 0.0;
      int c1_n = 0, c2_n = 0, acc_n = 0;
      for (std::size_t r = 0; r < t; ++r) {
        const EstimateRecord& rec = block.replicas[r][i];
        values[r] = rec.value;
        if (rec.c1) {
          c1_sum += *rec.c1;
          ++c1_n;
        }
        if (rec.c2) {
          c2_sum += *rec.c2;
          ++c2_n;
        }
        if (std::isfinite(rec.acceptance)) {
          acc_sum += rec.acceptance;
          ++acc_n;
        }
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(t);
      double variance = 0.0;
      for (double v : values) variance += (v - mean) * (v - mean);
      variance /= static_cast<double>(t - 1);

      double vrf_value = std::numeric_limits<double>::quiet_NaN();
      const std::optional<std::size_t> base =
          find_record(first, block.baseline, first[i].f);
      if (base) {
        std::vector<double> base_values(t);
        for (std::size_t r = 0; r < t; ++r)
          base_values[r] = block.replicas[r][*base].value;
        try {
          vrf_value = vrf(base_values, values);
        } catch (const NumericalError&) {
          vrf_value = std::numeric_limits<double>::infinity();
        }
      }

      summary_ << block.label << "," << first[i].estimator << "," << first[i].f
               << "," << fmt(mean) << "," << fmt(variance) << ","
               << fmt(vrf_value) << "," << block.baseline << ","
               << (c1_n ? fmt(c1_sum / c1_n) : std::string()) << ","
               << (c2_n ? fmt(c2_sum / c2_n) : std::string()) << ","
               << (acc_n ? fmt(acc_sum / acc_n) : std::string()) << "," << t
               << "\n";
    }
  }

  void write_trace(const std::vector<AdaptTraceRow>& trace) {
    std::ofstream out(dir_ / "trace.csv");
    out << "batch,kl,acceptance_rate,mu_norm,log_det_L\n";
    for (const AdaptTraceRow& r : trace)
      out << r.batch << "," << fmt(r.kl_to_standard) << ","
          << fmt(r.acceptance_rate) << "," << fmt(r.mu_norm) << ","
          << fmt(r.log_det_L) << "\n";
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static std::optional<std::size_t> find_record(const ReplicaRecords& records,
                                                const std::string& estimator,
                                                const std::string& f) {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].estimator == estimator && records[i].f == f) return i;
    return std::nullopt;
  }

  std::filesystem::path dir_;
  std::uint64_t seed_;
  std::ofstream summary_, jsonl_;
};

// 1-D Student-t proposal; only the synthetic study uses it.
struct StudentTProposal {
  double nu;
  int dim() const { return 1; }
  std::pair<Vector, Vector> sample(RngStream& rng) const {
    Vector y(1);
    y(0) = rng.student_t(nu);
    return {y, Vector()};
  }
  double logpdf(const Vector& y) const { return studentt_logpdf(y(0), nu); }
};

AdaptationConfig adaptation_config(const ExperimentConfig& cfg,
                                   GradEstimator default_kind, int n_batches,
                                   int burn_in_batches, bool track_kl) {
  AdaptationConfig acfg;
  acfg.batch_size = cfg.batch_size;
  acfg.n_batches = n_batches;
  acfg.burn_in_batches = burn_in_batches;
  acfg.gradient = cfg.grad_kind.empty()
                      ? default_kind
                      : (cfg.grad_kind == "stl" ? GradEstimator::stl
                                                : GradEstimator::dsvi);
  acfg.adam_mu.step = cfg.step_mu > 0 ? cfg.step_mu : 0.01;
  acfg.adam_L.step = cfg.step_l > 0 ? cfg.step_l : 0.005;
  acfg.adam_mu.decay_tau = cfg.decay_tau;
  acfg.adam_L.decay_tau = cfg.decay_tau;
  acfg.adam_mu.decay_kappa = cfg.decay_kappa;
  acfg.adam_L.decay_kappa = cfg.decay_kappa;
  acfg.track_kl_to_standard = track_kl;
  return acfg;
}

// Estimator battery for a fixed-proposal trajectory: IM, IMCV, IMCV-coef,
// RB and CIM-coef for every tracked function.
void append_fixed_proposal_estimates(ReplicaRecords& out, const Trajectory& traj,
                                     const std::string& name, const ScalarFn& F,
                                     double eq_f) {
  const double acc = traj.acceptance_rate();
  out.push_back(from_report(est_im(traj, F), name, acc));
  out.push_back(from_report(est_imcv(traj, F, eq_f), name, acc));
  out.push_back(from_report(est_imcv_coef(traj, F, eq_f), name, acc));
  out.push_back(from_report(est_rb(traj, F), name, acc));
  out.push_back(from_report(est_cim(traj, F, eq_f, true), name, acc));
}

struct NamedFunction {
  std::string name;
  FunctionSpec spec;
};

// ---------------------------------------------------------------------------
// oned-gauss / oned-t

template <class Proposal>
ReplicaRecords oned_replica(const TargetModel& target, const Proposal& prop,
                            const ExperimentConfig& cfg, int grid, int r) {
  RngStream chain_rng(cfg.seed, stream_id(grid, r));
  const Trajectory traj = run_chain(target, prop, cfg.n, cfg.burn_in, chain_rng);
  const double acc = traj.acceptance_rate();
  ScalarFn F = [](const Vector& x) { return x(0); };
  const double eq_f = 0.0;  // both proposal families are symmetric about 0

  ReplicaRecords out;
  RngStream cmc_rng(cfg.seed, stream_id(grid, r) | kRoleCmc);
  std::vector<Vector> draws(static_cast<std::size_t>(cfg.n), Vector(1));
  for (int i = 0; i < cfg.n; ++i) draws[i](0) = cmc_rng.normal();
  out.push_back(from_report(est_cmc(draws, F), "x", acc));
  out.push_back(from_report(est_im(traj, F), "x", acc));
  out.push_back(from_report(est_imcv(traj, F, eq_f), "x", acc));
  out.push_back(from_report(est_imcv_coef(traj, F, eq_f), "x", acc));
  out.push_back(from_report(est_rb(traj, F), "x", acc));
  out.push_back(from_report(est_cim(traj, F, eq_f, false), "x", acc));
  out.push_back(from_report(est_cim(traj, F, eq_f, true), "x", acc));
  return out;
}

void run_oned(const ExperimentConfig& cfg, OutputWriter& out) {
  const bool gauss = cfg.kind == ExperimentKind::oned_gauss;
  const std::vector<double>& grid = gauss ? cfg.sigma2_grid : cfg.nu_grid;
  for (int gi = 0; gi < static_cast<int>(grid.size()); ++gi) {
    const double param = grid[gi];
    std::ostringstream label;
    label << to_string(cfg.kind) << " " << (gauss ? "sigma2=" : "nu=") << param;
    Block block;
    if (gauss) {
      GaussianProposal prop(Vector::Zero(1),
                            CholeskyFactor(Matrix::Constant(1, 1,
                                                            std::sqrt(param))));
      TargetModel target;
      if (param == 1.0) {
        // q and pi share the same evaluations so every alpha is exactly one.
        target.dim = 1;
        target.id = "std-gaussian-1";
        target.log_density = [prop](const Vector& x) { return prop.logpdf(x); };
      } else {
        target = std_gaussian_target(1);
      }
      block = fanout_block(label.str(), "CMC", cfg.replicas, gi, cfg.seed,
                           [&](int r) {
                             return oned_replica(target, prop, cfg, gi, r);
                           });
    } else {
      StudentTProposal prop{param};
      TargetModel target = std_gaussian_target(1);
      block = fanout_block(label.str(), "CMC", cfg.replicas, gi, cfg.seed,
                           [&](int r) {
                             return oned_replica(target, prop, cfg, gi, r);
                           });
    }
    out.write_block(block);
  }
}

// ---------------------------------------------------------------------------
// gauss-d / logreg shared machinery

std::vector<NamedFunction> coordinate_functions(int d) {
  std::vector<NamedFunction> fs;
  for (int k = 0; k < d; ++k)
    fs.push_back({"x" + std::to_string(k), FunctionSpec::coordinate(k)});
  return fs;
}

ReplicaRecords adaptive_after_replica(const TargetModel& target,
                                      const GaussianProposal& q0,
                                      const std::vector<NamedFunction>& fs,
                                      const ExperimentConfig& cfg,
                                      GradEstimator default_kind, int grid,
                                      int r,
                                      std::vector<AdaptTraceRow>* trace_out) {
  AdaptationConfig acfg = adaptation_config(cfg, default_kind, 1,
                                            cfg.adapt_batches - 1,
                                            target.id.rfind("std-gaussian", 0) == 0);
  RngStream adapt_rng(cfg.seed, stream_id(grid, r) | kRoleAdapt);
  BatchedRun run = run_chain_batched(target, q0, acfg, {}, adapt_rng);
  if (trace_out && r == 0) *trace_out = run.trace;

  RngStream rng(cfg.seed, stream_id(grid, r));
  const Trajectory traj =
      run_chain(target, run.final_proposal, cfg.n, cfg.burn_in, rng);
  ReplicaRecords out;
  for (const NamedFunction& f : fs) {
    const double eq_f = analytic_expectation(run.final_proposal, f.spec);
    append_fixed_proposal_estimates(out, traj, f.name, f.spec.evaluator(), eq_f);
  }
  return out;
}

ReplicaRecords adaptive_during_replica(const TargetModel& target,
                                       const GaussianProposal& q0,
                                       const std::vector<NamedFunction>& fs,
                                       const ExperimentConfig& cfg,
                                       GradEstimator default_kind, int grid,
                                       int r,
                                       std::vector<AdaptTraceRow>* trace_out) {
  AdaptationConfig acfg = adaptation_config(cfg, default_kind, cfg.n_batches,
                                            cfg.adapt_batches,
                                            target.id.rfind("std-gaussian", 0) == 0);
  std::vector<FunctionSpec> tracked;
  tracked.reserve(fs.size());
  for (const NamedFunction& f : fs) tracked.push_back(f.spec);

  RngStream rng(cfg.seed, stream_id(grid, r));
  BatchedRun run = run_chain_batched(target, q0, acfg, tracked, rng);
  if (trace_out && r == 0) *trace_out = run.trace;

  const Trajectory& traj = run.trajectory;
  const double acc = traj.acceptance_rate();
  ReplicaRecords out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const ScalarFn F = fs[i].spec.evaluator();
    out.push_back(from_report(est_im(traj, F), fs[i].name, acc));
    out.push_back(from_report(est_batch(traj, F, i, false), fs[i].name, acc));
    out.push_back(from_report(est_batch(traj, F, i, true), fs[i].name, acc));
  }
  return out;
}

void run_adaptive_experiment(const ExperimentConfig& cfg, OutputWriter& out,
                             const TargetModel& target,
                             const GaussianProposal& q0,
                             const std::vector<NamedFunction>& fs,
                             GradEstimator default_kind,
                             const std::string& label) {
  std::vector<AdaptTraceRow> trace;
  Block block;
  if (cfg.mode == "after") {
    block = fanout_block(label, "IM", cfg.replicas, 0, cfg.seed, [&](int r) {
      return adaptive_after_replica(target, q0, fs, cfg, default_kind, 0, r,
                                    &trace);
    });
  } else {
    block = fanout_block(label, "IM", cfg.replicas, 0, cfg.seed, [&](int r) {
      return adaptive_during_replica(target, q0, fs, cfg, default_kind, 0, r,
                                     &trace);
    });
  }
  out.write_block(block);
  out.write_trace(trace);
}

void run_gauss_d(const ExperimentConfig& cfg, OutputWriter& out) {
  const int d = cfg.dim;
  const TargetModel target = std_gaussian_target(d);
  Matrix L0 = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) L0(i, j) = 1.0;
  const GaussianProposal q0(Vector::Ones(d), CholeskyFactor(L0));
  std::ostringstream label;
  label << "gauss-d d=" << d << " mode=" << cfg.mode;
  run_adaptive_experiment(cfg, out, target, q0, coordinate_functions(d),
                          GradEstimator::dsvi, label.str());
}

std::filesystem::path resolve_dataset(const ExperimentConfig& cfg) {
  std::filesystem::path p(cfg.dataset);
  if (p.extension() == ".csv") {
    if (std::filesystem::exists(p)) return p;
    if (std::filesystem::exists(cfg.data_dir / p)) return cfg.data_dir / p;
    throw DatasetError("dataset file not found: " + p.string());
  }
  const std::filesystem::path named = cfg.data_dir / (cfg.dataset + ".csv");
  if (!std::filesystem::exists(named))
    throw DatasetError("dataset file not found: " + named.string());
  return named;
}

void run_logreg(const ExperimentConfig& cfg, OutputWriter& out) {
  const LogisticData data = load_logistic_csv(resolve_dataset(cfg));
  const TargetModel target = logistic_posterior(data, 1.0);
  const int d = target.dim;

  std::vector<NamedFunction> fs = coordinate_functions(d);
  for (int k = 0; k < d; ++k)
    fs.push_back(
        {"x" + std::to_string(k) + "^2", FunctionSpec::coordinate_square(k)});
  const Vector xbar = data.X.colwise().mean();
  fs.push_back({"odds", FunctionSpec::exp_linear(xbar)});

  std::ostringstream label;
  label << "logreg " << cfg.dataset << " mode=" << cfg.mode;
  run_adaptive_experiment(cfg, out, target, GaussianProposal::standard(d), fs,
                          GradEstimator::stl, label.str());
}

void run_gp(const ExperimentConfig& cfg, OutputWriter& out) {
  GpData data = load_gp_csv(resolve_dataset(cfg));
  if (cfg.gp_subsample > 0) data = gp_head(data, cfg.gp_subsample);
  const TargetModel target = gp_hyper_posterior(data, 10.0);

  std::vector<NamedFunction> fs;
  const char* names[3] = {"log_sigma2", "log_sigmaf2", "log_ell2"};
  const char* exp_names[3] = {"sigma2", "sigmaf2", "ell2"};
  for (int k = 0; k < 3; ++k)
    fs.push_back({names[k], FunctionSpec::coordinate(k)});
  for (int k = 0; k < 3; ++k) {
    Vector a = Vector::Zero(3);
    a(k) = 1.0;
    fs.push_back({exp_names[k], FunctionSpec::exp_linear(a)});
  }

  // Adaptation is shared: one run fixes the proposal, replicas re-sample.
  AdaptationConfig acfg = adaptation_config(cfg, GradEstimator::stl, 1,
                                            cfg.adapt_batches - 1, false);
  RngStream adapt_rng(cfg.seed, kRoleSharedAdapt);
  const BatchedRun adapted =
      run_chain_batched(target, GaussianProposal::standard(3), acfg, {},
                        adapt_rng);

  std::ostringstream label;
  label << "gp " << cfg.dataset << " N=" << data.X.rows();
  Block block = fanout_block(label.str(), "IM", cfg.replicas, 0, cfg.seed,
                             [&](int r) {
    RngStream rng(cfg.seed, stream_id(0, r));
    const Trajectory traj =
        run_chain(target, adapted.final_proposal, cfg.n, cfg.burn_in, rng);
    ReplicaRecords recs;
    for (const NamedFunction& f : fs) {
      const double eq_f = analytic_expectation(adapted.final_proposal, f.spec);
      append_fixed_proposal_estimates(recs, traj, f.name, f.spec.evaluator(),
                                      eq_f);
    }
    return recs;
  });
  out.write_block(block);
  out.write_trace(adapted.trace);
}

void run_modelselect(const ExperimentConfig& cfg, OutputWriter& out) {
  RngStream data_rng(cfg.seed, kRoleData);
  const RegressionProblem problem = gen_synthetic(data_rng);

  ModelScanOptions opts;
  opts.mixture_components = cfg.mixture_k;
  opts.chain_length = cfg.n;
  opts.replicas = cfg.replicas;
  opts.pseudo_marginal_samples = cfg.pm_samples;
  opts.seed = cfg.seed;
  const std::vector<ModelScanRow> rows = run_model_scan(problem, opts);

  std::ofstream table(out.dir() / "modelscan.csv");
  table << "model,dim,imcv_neglog10,cmc_neglog10,oracle_neglog10,vrf,replicas,"
           "error\n";
  std::printf("%-8s %14s %14s %14s %12s\n", "model", "-log10(IMCV)",
              "-log10(CMC)", "oracle", "VRF");
  for (const ModelScanRow& r : rows) {
    table << r.model << "," << r.dim << "," << fmt(r.imcv_neglog10) << ","
          << fmt(r.cmc_neglog10) << "," << fmt(r.oracle_neglog10) << ","
          << fmt(r.vrf) << "," << r.replicas_used << "," << r.error << "\n";
    if (r.error.empty())
      std::printf("%-8s %14.2f %14.2f %14.2f %12.2f\n", r.model.c_str(),
                  r.imcv_neglog10, r.cmc_neglog10, r.oracle_neglog10, r.vrf);
    else
      std::printf("%-8s failed: %s\n", r.model.c_str(), r.error.c_str());

    if (r.error.empty() && r.replicas_used >= 2) {
      Block block;
      block.label = "modelselect " + r.model;
      block.baseline = "CMC";
      for (int i = 0; i < r.replicas_used; ++i) {
        block.replica_ids.push_back(i);
        block.streams.push_back(0);
        ReplicaRecords recs;
        EstimateRecord cmc{"CMC", "-log10(f(y|m))", r.cmc_replicas[i],
                           std::nullopt, std::nullopt,
                           static_cast<std::size_t>(cfg.n),
                           std::numeric_limits<double>::quiet_NaN()};
        EstimateRecord im{"IMCV", "-log10(f(y|m))", r.imcv_replicas[i],
                          std::nullopt, std::nullopt,
                          static_cast<std::size_t>(cfg.n),
                          std::numeric_limits<double>::quiet_NaN()};
        recs.push_back(cmc);
        recs.push_back(im);
        block.replicas.push_back(std::move(recs));
      }
      out.write_block(block);
    }
  }
}

void run_bounds(const ExperimentConfig& cfg, OutputWriter& out) {
  std::ofstream table(out.dir() / "bounds.csv");
  table << "family,param,bound,se,log10_vrf_lower\n";
  for (double s2 : cfg.sigma2_grid) {
    const BoundResult b = bound_1d_gaussian(s2, cfg.bound_tol);
    table << "gaussian," << fmt(s2) << "," << fmt(b.bound) << "," << fmt(b.se)
          << "," << fmt(b.log10_vrf_lower) << "\n";
  }
  for (int i = 0; i < static_cast<int>(cfg.nu_grid.size()); ++i) {
    RngStream rng(cfg.seed, kRoleBounds + static_cast<std::uint64_t>(i));
    const BoundResult b = bound_1d_student_t(cfg.nu_grid[i], cfg.bound_mc, rng);
    table << "student-t," << fmt(cfg.nu_grid[i]) << "," << fmt(b.bound) << ","
          << fmt(b.se) << "," << fmt(b.log10_vrf_lower) << "\n";
  }
}

}  // namespace

ExperimentKind experiment_kind_from_name(const std::string& name) {
  if (name == "oned-gauss") return ExperimentKind::oned_gauss;
  if (name == "oned-t") return ExperimentKind::oned_t;
  if (name == "gauss-d") return ExperimentKind::gauss_d;
  if (name == "modelselect") return ExperimentKind::modelselect;
  if (name == "logreg") return ExperimentKind::logreg;
  if (name == "gp") return ExperimentKind::gp;
  if (name == "bounds") return ExperimentKind::bounds;
  throw ConfigError("unknown experiment: " + name);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::oned_gauss: return "oned-gauss";
    case ExperimentKind::oned_t: return "oned-t";
    case ExperimentKind::gauss_d: return "gauss-d";
    case ExperimentKind::modelselect: return "modelselect";
    case ExperimentKind::logreg: return "logreg";
    case ExperimentKind::gp: return "gp";
    case ExperimentKind::bounds: return "bounds";
  }
  return "?";
}

void apply_config_file(ExperimentConfig& cfg,
                       const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "replicas") cfg.replicas = std::stoi(value);
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "out") cfg.out_dir = value;
      else if (key == "data") cfg.data_dir = value;
      else if (key == "dataset") cfg.dataset = value;
      else if (key == "n") cfg.n = std::stoi(value);
      else if (key == "burn_in") cfg.burn_in = std::stoi(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "n_batches") cfg.n_batches = std::stoi(value);
      else if (key == "adapt_batches") cfg.adapt_batches = std::stoi(value);
      else if (key == "grad") cfg.grad_kind = value;
      else if (key == "step_mu") cfg.step_mu = std::stod(value);
      else if (key == "step_l") cfg.step_l = std::stod(value);
      else if (key == "decay_tau") cfg.decay_tau = std::stod(value);
      else if (key == "decay_kappa") cfg.decay_kappa = std::stod(value);
      else if (key == "mode") cfg.mode = value;
      else if (key == "dim") cfg.dim = std::stoi(value);
      else if (key == "mixture_k") cfg.mixture_k = std::stoi(value);
      else if (key == "pm_samples") cfg.pm_samples = std::stoi(value);
      else if (key == "gp_subsample") cfg.gp_subsample = std::stoi(value);
      else if (key == "bound_tol") cfg.bound_tol = std::stod(value);
      else if (key == "bound_mc") cfg.bound_mc = std::stoll(value);
      else if (key == "sigma2_grid" || key == "nu_grid") {
        std::vector<double> grid;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
        if (grid.empty()) throw ConfigError("empty grid for " + key);
        (key == "sigma2_grid" ? cfg.sigma2_grid : cfg.nu_grid) = grid;
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad value for " + key);
    }
  }
}

void finalize_config(ExperimentConfig& cfg) {
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  switch (cfg.kind) {
    case ExperimentKind::oned_gauss:
    case ExperimentKind::oned_t:
      if (cfg.replicas == 0) cfg.replicas = 20;
      if (cfg.n == 0) cfg.n = 5000;
      break;
    case ExperimentKind::modelselect:
      if (cfg.replicas == 0) cfg.replicas = 100;
      if (cfg.n == 0) cfg.n = 1000;
      break;
    case ExperimentKind::gauss_d:
      if (cfg.replicas == 0) cfg.replicas = 50;
      if (cfg.n_batches == 0) cfg.n_batches = 100;
      if (cfg.n == 0)
        cfg.n = cfg.mode == "during" ? cfg.n_batches * cfg.batch_size : 5000;
      break;
    case ExperimentKind::logreg:
      if (cfg.replicas == 0) cfg.replicas = 50;
      if (cfg.n_batches == 0) cfg.n_batches = 20;
      if (cfg.n == 0)
        cfg.n = cfg.mode == "during" ? cfg.n_batches * cfg.batch_size : 5000;
      if (cfg.dataset.empty()) cfg.dataset = "ripley";
      break;
    case ExperimentKind::gp:
      if (cfg.replicas == 0) cfg.replicas = 50;
      if (cfg.n == 0) cfg.n = 1000;
      if (cfg.dataset.empty()) cfg.dataset = "boston";
      break;
    case ExperimentKind::bounds:
      if (cfg.replicas == 0) cfg.replicas = 2;
      if (cfg.n == 0) cfg.n = 1;
      break;
  }
  if (cfg.kind != ExperimentKind::bounds && cfg.replicas < 2)
    throw ConfigError("replicas must be >= 2 for variance reports");
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  if (cfg.mode != "after" && cfg.mode != "during")
    throw ConfigError("mode must be 'after' or 'during'");
  if (cfg.mode == "during" &&
      (cfg.kind == ExperimentKind::gauss_d ||
       cfg.kind == ExperimentKind::logreg)) {
    if (cfg.n != cfg.n_batches * cfg.batch_size)
      throw ConfigError("batched runs need n = n_batches * batch_size");
  }
  if (cfg.batch_size < 1 || cfg.adapt_batches < 1)
    throw ConfigError("batch settings must be positive");
  if (cfg.kind == ExperimentKind::gauss_d && cfg.dim < 1)
    throw ConfigError("dim must be >= 1");
  for (double s2 : cfg.sigma2_grid)
    if (!(s2 > 0.0)) throw ConfigError("sigma2 grid must be positive");
  for (double nu : cfg.nu_grid)
    if (!(nu > 0.0)) throw ConfigError("nu grid must be positive");
}

void run_experiment(const ExperimentConfig& cfg) {
  par::set_threads(cfg.threads);
  OutputWriter out(cfg.out_dir, cfg.seed);
  switch (cfg.kind) {
    case ExperimentKind::oned_gauss:
    case ExperimentKind::oned_t:
      run_oned(cfg, out);
      break;
    case ExperimentKind::gauss_d:
      run_gauss_d(cfg, out);
      break;
    case ExperimentKind::logreg:
      run_logreg(cfg, out);
      break;
    case ExperimentKind::gp:
      run_gp(cfg, out);
      break;
    case ExperimentKind::modelselect:
      run_modelselect(cfg, out);
      break;
    case ExperimentKind::bounds:
      run_bounds(cfg, out);
      break;
  }
}

}  // namespace vrim
