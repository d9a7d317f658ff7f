#pragma once

#include <cstdint>
#include <random>

namespace mvdsc {

/// Deterministic random stream. Every stochastic operation in the library
/// draws from one of these so that a run is a pure function of its seed.
/// The variate transforms are hand-rolled because the std:: distributions
/// are implementation-defined and would break bit-reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix(seed)) {}

  /// Substream that is statistically independent of other stream ids
  /// derived from the same seed.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second element of each pair is
  /// cached, so draws come in a fixed order.
  double normal();

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);

 private:
  static std::uint64_t mix(std::uint64_t x);

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mvdsc
