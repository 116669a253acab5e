#pragma once

// Random streams. Every stochastic call takes an explicit stream; seeds for
// independent streams are derived from a master seed by hashing the
// (stage, point, replicate) counters with splitmix64.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace sbim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream for (stage, point, replicate) under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t point = 0,
                                 std::uint64_t replicate = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ stage);
  h = splitmix64(h ^ point);
  h = splitmix64(h ^ replicate);
  return h;
}

/// A 64-bit Mersenne Twister with the few variate generators the library
/// needs. Satisfies UniformRandomBitGenerator, so std distributions work too.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return eng_(); }

  /// Uniform on (0, 1); never returns 0 so that log(u) is finite.
  double uniform() {
    double u;
    do {
      u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  double normal() { return normal_(*this); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(*this);
  }

  double chi_squared(double dof) { return std::gamma_distribution<double>(0.5 * dof, 2.0)(*this); }

  int poisson(double mean) { return std::poisson_distribution<int>(mean)(*this); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_;
};

}  // namespace sbim
