#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace xcl {

/// Deterministic random source.
///
/// The engine is std::mt19937_64 seeded through SplitMix64. Uniform and
/// normal variates are derived from raw 64-bit draws by fixed formulas
/// (53-bit mantissa fill, Box-Muller) rather than the standard library
/// distributions, whose output is implementation-defined. A given seed
/// therefore yields the same stream on every platform.
///
/// Substreams are derived from (seed, purpose label) so that e.g. weight
/// initialisation and batch shuffling never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent generator keyed by `purpose`; does not advance this one.
  Rng substream(std::string_view purpose) const;
  /// Independent generator keyed by an integer (member index, seed offset).
  Rng substream(std::uint64_t key) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Standard normal.
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace xcl
