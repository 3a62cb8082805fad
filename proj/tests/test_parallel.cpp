#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "vrim/core/parallel.hpp"
#include "vrim/core/rng.hpp"

using namespace vrim;

TEST_CASE("chunked reduction is bitwise invariant to the thread count") {
  RngStream rng(1, 0);
  const std::int64_t n = 1 << 20;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal();
  auto term = [&](std::int64_t i) { return std::sin(data[i]) * data[i]; };

  par::set_threads(1);
  const double one = par::chunked_sum(n, term);
  par::set_threads(8);
  const double eight = par::chunked_sum(n, term);
  par::set_threads(3);
  const double three = par::chunked_sum(n, term);
  par::set_threads(0);

  CHECK(one == eight);
  CHECK(one == three);
}

TEST_CASE("chunked reduction agrees with the serial reference") {
  RngStream rng(2, 0);
  const std::int64_t n = 100001;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal();
  auto term = [&](std::int64_t i) { return data[i]; };
  const double serial = par::serial_sum(n, term);
  const double chunked = par::chunked_sum(n, term);
  CHECK(chunked == doctest::Approx(serial).epsilon(1e-13));
  // Below one chunk the paths are identical.
  CHECK(par::chunked_sum(1000, term) == par::serial_sum(1000, term));
}

TEST_CASE("parallel_for writes every slot once") {
  const std::int64_t n = 50000;
  std::vector<double> out(n, 0.0);
  par::parallel_for(n, [&](std::int64_t i) { out[i] += double(i); });
  for (std::int64_t i = 0; i < n; i += 999) CHECK(out[i] == double(i));
}
