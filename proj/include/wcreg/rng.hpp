#pragma once

#include "wcreg/tensor.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace wcreg {

/// Counter-based generator: the i-th draw is a SplitMix64 finaliser applied to
/// key + i * golden-gamma. Streams are derived by hashing a name into the key, so
/// adding a new consumer never shifts the draws seen by an existing one.
///
/// All distributions are implemented here (not via <random>) so draws are
/// identical across standard library implementations.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed)) {}

  /// Independent child stream identified by name.
  Rng stream(std::string_view name) const;
  Rng stream(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (the spare value is cached).
  double normal();

  DenseArray uniform_array(const Shape& shape, double lo, double hi);
  DenseArray normal_array(const Shape& shape, double stddev = 1.0);
  /// Random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  static std::uint64_t mix(std::uint64_t z);

private:
  struct KeyTag
  {
  };
  Rng(std::uint64_t key, KeyTag) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace wcreg
