// Timing comparison of the OpenMP kernels against their serial references.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "vrim/core/parallel.hpp"
#include "vrim/core/rng.hpp"
#include "vrim/datasets.hpp"
#include "vrim/estimators.hpp"
#include "vrim/targets.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.4fs   openmp %8.4fs   speedup %5.2fx\n", name,
              serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  if (argc > 1) threads = std::atoi(argv[1]);
  if (threads > 0) vrim::par::set_threads(threads);
  std::printf("threads: %d\n", vrim::par::threads());

  vrim::RngStream rng(7, 0);

  {
    const std::int64_t n = 20'000'000;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.normal();
    volatile double sink = 0.0;
    const double ts = time_best_of(3, [&] {
      sink = vrim::par::serial_sum(n, [&](std::int64_t i) {
        return data[i] * data[i] - 0.5 * data[i];
      });
    });
    const double tp = time_best_of(3, [&] {
      sink = vrim::par::chunked_sum(n, [&](std::int64_t i) {
        return data[i] * data[i] - 0.5 * data[i];
      });
    });
    (void)sink;
    report("chunked reduction (2e7)", ts, tp);
  }

  {
    const int n = 400'000, d = 25;
    vrim::LogisticData data;
    data.X.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) data.X(i, j) = rng.normal();
      data.y(i) = rng.uniform_co() < 0.5 ? 0.0 : 1.0;
    }
    const vrim::TargetModel target = vrim::logistic_posterior(data, 1.0);
    vrim::Vector beta = vrim::Vector::Constant(d, 0.1);
    volatile double sink = 0.0;
    const int saved = vrim::par::threads();
    vrim::par::set_threads(1);
    const double ts =
        time_best_of(3, [&] { sink = target.log_density(beta); });
    vrim::par::set_threads(saved);
    const double tp =
        time_best_of(3, [&] { sink = target.log_density(beta); });
    (void)sink;
    report("logistic log-density (4e5)", ts, tp);
  }

  {
    // Estimator pass over a long synthetic trajectory.
    const int n = 2'000'000;
    vrim::Trajectory traj;
    traj.records.resize(n);
    for (int i = 0; i < n; ++i) {
      vrim::StepRecord& r = traj.records[i];
      r.x = vrim::Vector::Constant(1, rng.normal());
      r.y = vrim::Vector::Constant(1, rng.normal());
      r.alpha = rng.uniform_co();
    }
    vrim::BatchInfo b;
    b.begin = 0;
    b.end = traj.records.size();
    traj.batches.push_back(b);
    const vrim::ScalarFn F = [](const vrim::Vector& x) { return x(0); };
    volatile double sink = 0.0;
    const int saved = vrim::par::threads();
    vrim::par::set_threads(1);
    const double ts =
        time_best_of(3, [&] { sink = vrim::est_imcv(traj, F, 0.0).value; });
    vrim::par::set_threads(saved);
    const double tp =
        time_best_of(3, [&] { sink = vrim::est_imcv(traj, F, 0.0).value; });
    (void)sink;
    report("imcv estimator pass (2e6)", ts, tp);
  }

  return 0;
}
