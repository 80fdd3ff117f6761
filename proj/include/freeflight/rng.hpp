#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

#include "freeflight/geometry.hpp"

namespace freeflight {

// splitmix64 finalizer; used to spread structured ids into seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a base seed and a list of stream ids
// (e.g. {stream tag, step, aircraft}).  Same inputs give the same
// seed on every platform; different ids decorrelate.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t id : ids) {
    h = mix64(h ^ (id + 0x9e3779b97f4a7c15ULL + (h << 12) + (h >> 4)));
  }
  return h;
}

// Named top-level streams so unrelated consumers never share a sequence.
namespace stream {
inline constexpr std::uint64_t kScenario = 0x01;
inline constexpr std::uint64_t kEpisode = 0x02;
inline constexpr std::uint64_t kTube = 0x03;
inline constexpr std::uint64_t kFreshSample = 0x04;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform double in [0, 1), 53 usable bits.
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    auto i = static_cast<std::size_t>(u01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Uniform point in the closed Euclidean ball of the given radius,
  // by rejection from the bounding cube.
  Vec3 in_ball(double radius) {
    for (;;) {
      double x = uniform(-1.0, 1.0);
      double y = uniform(-1.0, 1.0);
      double z = uniform(-1.0, 1.0);
      if (x * x + y * y + z * z <= 1.0) return {x * radius, y * radius, z * radius};
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace freeflight
