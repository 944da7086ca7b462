#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ssmc {

/// Seeded pseudo-random stream. All simulation randomness goes through one of
/// these so that a run is a pure function of its seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next() { return engine_(); }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Seed of trial `index` under `master`. Distinct indices give distinct seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace ssmc
