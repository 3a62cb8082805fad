#ifndef VRIM_CORE_PARALLEL_HPP
#define VRIM_CORE_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Deterministic data-parallel primitives.  Reductions are chunked with a
// fixed chunk size and the per-chunk partials are combined serially in chunk
// order, so the result is bitwise identical for every thread count.
namespace vrim::par {

inline int& thread_setting() {
  static int n = 0;  // 0 = library default
  return n;
}

inline void set_threads(int n) { thread_setting() = n; }

inline int threads() {
#ifdef _OPENMP
  int n = thread_setting();
  return n > 0 ? n : omp_get_max_threads();
#else
  return 1;
#endif
}

inline constexpr std::int64_t kChunk = 4096;

// Serial reference reduction, kept for the tests and the benchmark.
template <class Term>
double serial_sum(std::int64_t n, Term&& term) {
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += term(i);
  return s;
}

template <class Term>
double chunked_sum(std::int64_t n, Term&& term, std::int64_t chunk = kChunk) {
  if (n <= chunk) return serial_sum(n, term);
  const std::int64_t nchunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads())
#endif
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Element-wise fill with disjoint writes; deterministic by construction.
template <class Body>
void parallel_for(std::int64_t n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads())
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

template <class Body>
void serial_for(std::int64_t n, Body&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace vrim::par

#endif
