#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace hedgekit {

/// splitmix64 finalizer; used to derive independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Counter-based split of a master seed: stream `index` of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Inverse of the standard normal CDF (Acklam's rational approximation with
/// one Halley refinement step). Requires 0 < p < 1.
double inverse_normal_cdf(double p);

/// Seeded random stream. Only the engine's raw 64-bit output is used and every
/// transform is spelled out here, so draws are identical on every platform
/// (the std distributions are implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return inverse_normal_cdf(uniform()); }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace hedgekit
