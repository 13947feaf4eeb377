#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "remcd/error.hpp"

namespace remcd {

/// splitmix64 step; used to mix seeds and derive independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic RNG with hand-rolled variate transforms so that a given
/// (seed, call sequence) reproduces bit-identical draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    gen_.seed(splitmix64(s));
  }

  /// Independent substream for (seed, stream_id); used for per-replication
  /// and per-event randomness.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL);
    return Rng(splitmix64(s));
  }

  /// Derived seed for a named substream, e.g. per (n, replication).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = seed;
    std::uint64_t x = splitmix64(s);
    s = x ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
    return splitmix64(s);
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1).
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) raise(ErrorCode::InvalidConfig, "exponential rate must be positive");
    return -std::log(1.0 - u01()) / rate;
  }

  double normal(double mean, double sd) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    // Box-Muller; u strictly in (0, 1].
    double u = 1.0 - u01();
    double v = u01();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + sd * r * std::cos(theta);
  }

  bool bernoulli(double p) { return u01() < p; }

  /// Uniform integer on [0, n); unbiased via rejection.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) raise(ErrorCode::InvalidConfig, "uniform_index requires n > 0");
    const std::uint64_t span = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % span);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace remcd
