#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dadagger {

/// SplitMix64 finalizer. Used to derive independent seeds from structured keys.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Folds a list of words into one seed. Order-sensitive.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Bit pattern of a double, for hashing real-valued parameters into seeds.
std::uint64_t double_bits(double v) noexcept;

/// Thin wrapper over mt19937_64. Distributions are implemented here instead of
/// using <random>'s so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dadagger
