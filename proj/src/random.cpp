#include "hoplab/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hoplab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::index: empty range");
  // Rejection sampling keeps the draw unbiased for any n.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

int RandomStream::spin() { return (engine_() >> 63) ? 1 : -1; }

bool RandomStream::bernoulli(double p) { return uniform() < p; }

double RandomStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

std::uint64_t RandomStream::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x3c6ef372fe94f82bULL));
  return h;
}

RandomStream RandomStream::split(std::initializer_list<std::uint64_t> tags) const {
  return RandomStream(derive(seed_, tags));
}

}  // namespace hoplab
