#ifndef VRIM_TESTS_TEST_UTIL_HPP
#define VRIM_TESTS_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "vrim/core/linalg.hpp"

namespace tutil {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double sd(std::span<const double> v) { return std::sqrt(variance(v)); }

// Standard error of the mean.
inline double se(std::span<const double> v) {
  return sd(v) / std::sqrt(static_cast<double>(v.size()));
}

// Effective-sample-size aware standard error for a correlated chain, by
// non-overlapping batch means.
inline double batch_means_se(std::span<const double> chain) {
  const auto n = chain.size();
  const auto b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const auto m = n / b;
  std::vector<double> means(m);
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < b; ++i) s += chain[k * b + i];
    means[k] = s / static_cast<double>(b);
  }
  return sd(means) / std::sqrt(static_cast<double>(m));
}

// Central finite differences with per-coordinate relative step.
inline vrim::Vector fd_gradient(const std::function<double(const vrim::Vector&)>& f,
                                const vrim::Vector& x, double h0 = 1e-5) {
  vrim::Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = h0 * (1.0 + std::abs(x(j)));
    vrim::Vector hi = x, lo = x;
    hi(j) += h;
    lo(j) -= h;
    g(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double max_rel_err(const vrim::Vector& a, const vrim::Vector& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double scale = std::max({std::abs(a(j)), std::abs(b(j)), 1e-8});
    worst = std::max(worst, std::abs(a(j) - b(j)) / scale);
  }
  return worst;
}

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Jackknife standard error of log(VRF) over paired replicate lists.
inline double log_vrf_jackknife_se(std::span<const double> a,
                                   std::span<const double> b) {
  const auto t = a.size();
  auto css_without = [](std::span<const double> v, std::size_t skip) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (i != skip) m += v[i];
    m /= static_cast<double>(v.size() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (i != skip) s += (v[i] - m) * (v[i] - m);
    return s;
  };
  std::vector<double> loo(t);
  for (std::size_t i = 0; i < t; ++i)
    loo[i] = std::log(css_without(a, i) / css_without(b, i));
  const double m = mean(loo);
  double s = 0.0;
  for (double x : loo) s += (x - m) * (x - m);
  return std::sqrt(s * static_cast<double>(t - 1) / static_cast<double>(t));
}

// Spearman rank correlation.
inline double rank_correlation(std::span<const double> a,
                               std::span<const double> b) {
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
      r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

}  // namespace tutil

#endif
