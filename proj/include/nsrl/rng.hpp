#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace nsrl {

/// SplitMix64 finalizer; used to derive independent seeds from a master seed.
std::uint64_t mix64(std::uint64_t x);

/// Seedable, splittable random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The variate transforms below are written out here instead of
/// using <random> distributions, whose algorithms are implementation-defined,
/// so a given seed yields the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

  /// Child stream for (master, path...). Distinct paths give independent streams.
  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). n must be positive.
  std::size_t below(std::size_t n);

  double normal();
  double exponential();
  double gamma(double shape);
  int poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace nsrl
