#ifndef VRIM_CORE_RNG_HPP
#define VRIM_CORE_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "vrim/core/errors.hpp"

namespace vrim {

// Counter-style seeded stream: (seed, stream_id) fully determines the draw
// sequence and distinct stream ids give unrelated sequences, so replicated
// experiments can hand out one stream per job.  xoshiro256++ state seeded
// through SplitMix64.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {
    std::uint64_t x = splitmix(seed ^ 0x2545F4914F6CDD1DULL);
    x ^= splitmix(stream_id ^ 0x9E3779B97F4A7C15ULL);
    for (auto& w : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      w = splitmix(x);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; safe under log.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double uniform_co() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1), both ends excluded; safe for inverse CDFs.
  double uniform_oo() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform_co();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang; shapes below one go through the boost
  // G(a) = G(a+1) * U^{1/a}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw NumericalError("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  double student_t(double nu) {
    if (!(nu > 0.0)) throw NumericalError("student_t: nu must be positive");
    const double z = normal();
    const double c = chi_square(nu);
    return z * std::sqrt(nu / c);
  }

  // Index draw from unnormalised non-negative weights.
  template <class Weights>
  int categorical(const Weights& w, int k) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += w[i];
    double u = uniform_co() * total;
    for (int i = 0; i < k; ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return k - 1;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_, stream_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vrim

#endif
