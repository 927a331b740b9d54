#pragma once

#include <cstdint>
#include <vector>

namespace fairpost {

// Deterministic random stream (xoshiro256++ seeded through splitmix64).
// All distributions are derived from uniform bits by hand so that results are
// bit-identical across platforms and standard library implementations.
//
// Independent substreams are derived from a (seed, stream id) pair; callers
// that process rows concurrently give each row its own stream so the output
// does not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(seed, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_bits();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on (0, 1); never returns 0 (safe for logarithms).
  double uniform_open01();

  // Integer uniform on [0, n) by rejection; n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  // Laplace(0, scale) via inverse CDF.
  double laplace(double scale);

  // Standard normal via polar Box-Muller (second value cached).
  double normal();

  // Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
  double gamma(double alpha);

  // Dirichlet(alpha) as normalized gammas.
  std::vector<double> dirichlet(const std::vector<double>& alpha);

  // Samples an index from an (unnormalized) nonnegative weight vector.
  // Scans cumulative sums; the final positive weight absorbs rounding.
  int categorical(const std::vector<double>& weights);

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fairpost
