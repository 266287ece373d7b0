#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hoplab {

/// Seeded pseudo-random stream. Distributions are implemented here rather than
/// taken from <random> so that draws are identical across standard libraries.
///
/// Child streams are derived by hashing the parent seed together with a list of
/// integer tags, so stream (seed, j, k) does not depend on how many values any
/// other stream consumed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Uniform draw from {-1, +1}.
  int spin();
  bool bernoulli(double p);
  double normal();

  RandomStream split(std::initializer_list<std::uint64_t> tags) const;

  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hoplab
