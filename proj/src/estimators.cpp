#include "vrim/estimators.hpp"

#include <cmath>
#include <cstdio>

#include "vrim/core/parallel.hpp"

namespace vrim {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::im: return "IM";
    case EstimatorKind::imcv: return "IMCV";
    case EstimatorKind::imcv_approx: return "IMCV-approx";
    case EstimatorKind::imcv_coef: return "IMCV-coef";
    case EstimatorKind::rb: return "RB";
    case EstimatorKind::cim: return "CIM";
    case EstimatorKind::cim_coef: return "CIM-coef";
    case EstimatorKind::batch: return "BATCH";
    case EstimatorKind::batch_coef: return "BATCH-coef";
    case EstimatorKind::cmc: return "CMC";
  }
  return "?";
}

namespace {

struct Evaluations {
  std::vector<double> fx, fy, alpha;
};

Evaluations evaluate(const Trajectory& traj, const ScalarFn& F) {
  const auto n = static_cast<std::int64_t>(traj.records.size());
  Evaluations ev;
  ev.fx.resize(n);
  ev.fy.resize(n);
  ev.alpha.resize(n);
  par::parallel_for(n, [&](std::int64_t i) {
    const StepRecord& r = traj.records[static_cast<std::size_t>(i)];
    ev.fx[i] = F(r.x);
    ev.fy[i] = F(r.y);
    ev.alpha[i] = r.alpha;
  });
  return ev;
}

void require_nonempty(const Trajectory& traj, const char* who) {
  if (traj.records.empty())
    throw NumericalError(std::string(who) + ": empty trajectory");
}

// Summand of the whole control-variate family, grouped so that the ideal
// q = pi trajectory (alpha = 1, c1 = c2 = 1) collapses to eq_f exactly:
//   (fx - c1 c2 fty) + c1 alpha (fy - fx) + c1 c2 eq_f
// where fty holds the surrogate values (fty = fy when F~ = F).
double family_sum(std::span<const double> fx, std::span<const double> fy,
                  std::span<const double> fty, std::span<const double> alpha,
                  double eq_f, double c1, double c2, std::int64_t begin,
                  std::int64_t end) {
  const double c12 = c1 * c2;
  const double shift = c12 * eq_f;
  return par::chunked_sum(end - begin, [&, begin](std::int64_t k) {
    const std::int64_t i = begin + k;
    return (fx[i] - c12 * fty[i]) + c1 * alpha[i] * (fy[i] - fx[i]) + shift;
  });
}

void warn_degenerate(const char* who) {
  std::fprintf(stderr, "warning: %s: degenerate denominator, coefficient set to 1\n",
               who);
}

double fit_c2_range(std::span<const double> fx, std::span<const double> fy,
                    std::span<const double> alpha, double eq_f,
                    std::int64_t begin, std::int64_t end) {
  const std::int64_t m = end - begin;
  const double den = par::chunked_sum(m, [&](std::int64_t k) {
    const double dev = fy[begin + k] - eq_f;
    return dev * dev;
  });
  if (den == 0.0)
    throw DegenerateDenominator("fit_c2: F constant under the proposal");
  const double num = par::chunked_sum(m, [&](std::int64_t k) {
    const std::int64_t i = begin + k;
    return alpha[i] * (fy[i] - fx[i]) * (fy[i] - eq_f);
  });
  return num / den;
}

double fit_c1_range(std::span<const double> fx, std::span<const double> fy,
                    std::span<const double> alpha, double eq_f, double c2,
                    std::int64_t begin, std::int64_t end) {
  const std::int64_t m = end - begin;
  if (m < 2) throw DegenerateDenominator("fit_c1: need at least two records");
  auto pf = [&](std::int64_t i) {
    return (fx[i] - c2 * fy[i]) + alpha[i] * (fy[i] - fx[i]) + c2 * eq_f;
  };
  const double den = par::chunked_sum(m - 1, [&](std::int64_t k) {
    const std::int64_t i = begin + k + 1;
    const double dev = fx[i] - pf(i - 1);
    return dev * dev;
  });
  if (den == 0.0) throw DegenerateDenominator("fit_c1: degenerate denominator");
  const double sum_f = par::chunked_sum(m, [&](std::int64_t k) { return fx[begin + k]; });
  const double sum_fpf = par::chunked_sum(m, [&](std::int64_t k) {
    const std::int64_t i = begin + k;
    return fx[i] + pf(i);
  });
  const double sum_prod = par::chunked_sum(m, [&](std::int64_t k) {
    const std::int64_t i = begin + k;
    return fx[i] * (fx[i] + pf(i));
  });
  const double num = sum_prod - sum_f * sum_fpf / static_cast<double>(m);
  return num / den;
}

}  // namespace

EstimatorReport est_im(const Trajectory& traj, const ScalarFn& F) {
  require_nonempty(traj, "est_im");
  const auto n = static_cast<std::int64_t>(traj.records.size());
  std::vector<double> fx(n);
  par::parallel_for(n, [&](std::int64_t i) {
    fx[i] = F(traj.records[static_cast<std::size_t>(i)].x);
  });
  const double sum = par::chunked_sum(n, [&](std::int64_t i) { return fx[i]; });
  return {EstimatorKind::im, sum / static_cast<double>(n), std::nullopt,
          std::nullopt, static_cast<std::size_t>(n)};
}

EstimatorReport est_imcv_with_coef(const Trajectory& traj, const ScalarFn& F,
                                   double eq_f, double c1, double c2) {
  require_nonempty(traj, "est_imcv");
  const Evaluations ev = evaluate(traj, F);
  const auto n = static_cast<std::int64_t>(ev.fx.size());
  const double sum = family_sum(ev.fx, ev.fy, ev.fy, ev.alpha, eq_f, c1, c2, 0, n);
  return {EstimatorKind::imcv, sum / static_cast<double>(n), c1, c2,
          static_cast<std::size_t>(n)};
}

EstimatorReport est_imcv(const Trajectory& traj, const ScalarFn& F, double eq_f) {
  EstimatorReport r = est_imcv_with_coef(traj, F, eq_f, 1.0, 1.0);
  r.kind = EstimatorKind::imcv;
  r.c1.reset();
  r.c2.reset();
  return r;
}

EstimatorReport est_imcv_approx(const Trajectory& traj, const ScalarFn& F,
                                const ScalarFn& F_tilde, double eq_f_tilde) {
  require_nonempty(traj, "est_imcv_approx");
  const Evaluations ev = evaluate(traj, F);
  const auto n = static_cast<std::int64_t>(ev.fx.size());
  std::vector<double> fty(n);
  par::parallel_for(n, [&](std::int64_t i) {
    fty[i] = F_tilde(traj.records[static_cast<std::size_t>(i)].y);
  });
  const double sum =
      family_sum(ev.fx, ev.fy, fty, ev.alpha, eq_f_tilde, 1.0, 1.0, 0, n);
  return {EstimatorKind::imcv_approx, sum / static_cast<double>(n), std::nullopt,
          std::nullopt, static_cast<std::size_t>(n)};
}

double fit_c2(const Trajectory& traj, const ScalarFn& F, double eq_f) {
  require_nonempty(traj, "fit_c2");
  const Evaluations ev = evaluate(traj, F);
  return fit_c2_range(ev.fx, ev.fy, ev.alpha, eq_f, 0,
                      static_cast<std::int64_t>(ev.fx.size()));
}

double fit_c1(const Trajectory& traj, const ScalarFn& F, double eq_f, double c2) {
  require_nonempty(traj, "fit_c1");
  const Evaluations ev = evaluate(traj, F);
  return fit_c1_range(ev.fx, ev.fy, ev.alpha, eq_f, c2, 0,
                      static_cast<std::int64_t>(ev.fx.size()));
}

EstimatorReport est_imcv_coef(const Trajectory& traj, const ScalarFn& F,
                              double eq_f) {
  require_nonempty(traj, "est_imcv_coef");
  const Evaluations ev = evaluate(traj, F);
  const auto n = static_cast<std::int64_t>(ev.fx.size());
  double c2 = 1.0, c1 = 1.0;
  try {
    c2 = fit_c2_range(ev.fx, ev.fy, ev.alpha, eq_f, 0, n);
  } catch (const DegenerateDenominator&) {
    warn_degenerate("est_imcv_coef(c2)");
  }
  try {
    c1 = fit_c1_range(ev.fx, ev.fy, ev.alpha, eq_f, c2, 0, n);
  } catch (const DegenerateDenominator&) {
    warn_degenerate("est_imcv_coef(c1)");
  }
  const double sum = family_sum(ev.fx, ev.fy, ev.fy, ev.alpha, eq_f, c1, c2, 0, n);
  return {EstimatorKind::imcv_coef, sum / static_cast<double>(n), c1, c2,
          static_cast<std::size_t>(n)};
}

EstimatorReport est_rb(const Trajectory& traj, const ScalarFn& F) {
  require_nonempty(traj, "est_rb");
  const Evaluations ev = evaluate(traj, F);
  const auto n = static_cast<std::int64_t>(ev.fx.size());
  const double sum = par::chunked_sum(n, [&](std::int64_t i) {
    return ev.fx[i] + ev.alpha[i] * (ev.fy[i] - ev.fx[i]);
  });
  return {EstimatorKind::rb, sum / static_cast<double>(n), std::nullopt,
          std::nullopt, static_cast<std::size_t>(n)};
}

EstimatorReport est_cim(const Trajectory& traj, const ScalarFn& F, double eq_f,
                        bool with_coef) {
  if (traj.records.size() < 2)
    throw NumericalError("est_cim: need at least two records");
  const Evaluations ev = evaluate(traj, F);
  const auto n = static_cast<std::int64_t>(ev.fx.size());
  const auto m = n - 1;

  double c = 1.0;
  if (with_coef) {
    // PF(X_i, Y_i) = F(X_i) - (F(Y_{i-1}) - eq_f), defined from the second
    // record on; the denominator shifts once more.
    auto pf = [&](std::int64_t i) { return (ev.fx[i] - ev.fy[i - 1]) + eq_f; };
    const double den = par::chunked_sum(m - 1, [&](std::int64_t k) {
      const std::int64_t i = k + 2;
      const double dev = ev.fx[i] - pf(i - 1);
      return dev * dev;
    });
    if (den == 0.0 || m < 2) {
      warn_degenerate("est_cim");
    } else {
      const double sum_f =
          par::chunked_sum(m, [&](std::int64_t k) { return ev.fx[k + 1]; });
      const double sum_fpf = par::chunked_sum(m, [&](std::int64_t k) {
        return ev.fx[k + 1] + pf(k + 1);
      });
      const double sum_prod = par::chunked_sum(m, [&](std::int64_t k) {
        return ev.fx[k + 1] * (ev.fx[k + 1] + pf(k + 1));
      });
      c = (sum_prod - sum_f * sum_fpf / static_cast<double>(m)) / den;
    }
  }

  const double one_minus_c = 1.0 - c;
  const double shift = c * eq_f;
  const double sum = par::chunked_sum(m, [&](std::int64_t k) {
    const std::int64_t i = k + 1;
    return (ev.fx[i] - ev.fy[i - 1]) + one_minus_c * ev.fy[i - 1] + shift;
  });
  EstimatorReport r;
  r.kind = with_coef ? EstimatorKind::cim_coef : EstimatorKind::cim;
  r.value = sum / static_cast<double>(m);
  if (with_coef) r.c1 = c;
  r.n_used = static_cast<std::size_t>(m);
  return r;
}

EstimatorReport est_batch(const Trajectory& traj, const ScalarFn& F,
                          std::size_t tracked_idx, bool with_coef) {
  require_nonempty(traj, "est_batch");
  if (traj.batches.empty())
    throw NumericalError("est_batch: trajectory has no batches");
  for (const BatchInfo& b : traj.batches)
    if (tracked_idx >= b.eq_f.size())
      throw NumericalError("est_batch: batch is missing E_q[F] for this F");
  const Evaluations ev = evaluate(traj, F);

  double total = 0.0;
  std::int64_t count = 0;
  double c1_mean = 0.0, c2_mean = 0.0;
  for (const BatchInfo& b : traj.batches) {
    const auto begin = static_cast<std::int64_t>(b.begin);
    const auto end = static_cast<std::int64_t>(b.end);
    if (end <= begin) continue;
    const double eq_f = b.eq_f[tracked_idx];
    double c1 = 1.0, c2 = 1.0;
    if (with_coef) {
      try {
        c2 = fit_c2_range(ev.fx, ev.fy, ev.alpha, eq_f, begin, end);
      } catch (const DegenerateDenominator&) {
        warn_degenerate("est_batch(c2)");
      }
      try {
        c1 = fit_c1_range(ev.fx, ev.fy, ev.alpha, eq_f, c2, begin, end);
      } catch (const DegenerateDenominator&) {
        warn_degenerate("est_batch(c1)");
      }
    }
    total += family_sum(ev.fx, ev.fy, ev.fy, ev.alpha, eq_f, c1, c2, begin, end);
    count += end - begin;
    c1_mean += c1;
    c2_mean += c2;
  }
  if (count == 0) throw NumericalError("est_batch: no records in batches");

  EstimatorReport r;
  r.kind = with_coef ? EstimatorKind::batch_coef : EstimatorKind::batch;
  r.value = total / static_cast<double>(count);
  r.n_used = static_cast<std::size_t>(count);
  if (with_coef) {
    r.c1 = c1_mean / static_cast<double>(traj.batches.size());
    r.c2 = c2_mean / static_cast<double>(traj.batches.size());
  }
  return r;
}

EstimatorReport est_cmc(std::span<const Vector> samples, const ScalarFn& F) {
  if (samples.empty()) throw NumericalError("est_cmc: no samples");
  const auto n = static_cast<std::int64_t>(samples.size());
  std::vector<double> f(n);
  par::parallel_for(n, [&](std::int64_t i) {
    f[i] = F(samples[static_cast<std::size_t>(i)]);
  });
  const double sum = par::chunked_sum(n, [&](std::int64_t i) { return f[i]; });
  return {EstimatorKind::cmc, sum / static_cast<double>(n), std::nullopt,
          std::nullopt, static_cast<std::size_t>(n)};
}

double vrf(std::span<const double> values_a, std::span<const double> values_b) {
  if (values_a.size() < 2 || values_b.size() < 2)
    throw NumericalError("vrf: need at least two replicates per side");
  auto css = [](std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s;
  };
  const double den = css(values_b);
  if (den == 0.0) throw NumericalError("vrf: zero denominator");
  return css(values_a) / den;
}

}  // namespace vrim
