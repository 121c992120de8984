#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace okb {

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream owned by `component` (and `index`) under `master`.
///
/// Every run, environment and agent draws from its own stream so results do
/// not depend on how runs are scheduled across workers.
std::uint64_t split_seed(std::uint64_t master, std::string_view component,
                         std::uint64_t index = 0);

/// Random source with distributions defined here rather than by the standard
/// library, whose distribution algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}; n must be positive.
  int uniform_int(int n);

  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace okb
