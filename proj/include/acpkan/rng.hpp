#pragma once

#include <cstdint>

namespace acpkan {

/// splitmix64 generator with Box-Muller normals. The same seed always yields
/// the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) from the top 53 bits of a draw.
  double uniform();
  double uniform(double a, double b);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace acpkan
