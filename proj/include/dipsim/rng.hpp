#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Geometry>

namespace dipsim {

// SplitMix64 (Steele/Lea/Flood). Used instead of std:: engines/distributions
// so that streams are bit-identical across standard libraries and platforms.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (cosine branch only, so exactly two
  // uniforms are consumed per sample and the stream layout stays simple).
  double gaussian() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
  }

private:
  std::uint64_t state_;
};

// Decorrelated child seed: splitmix finalizer of seed + (stream+1)*golden.
// Stream 0 must not be the identity, hence the +1.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform random rotation (Shoemake's subgroup algorithm): three uniforms
// map to a Haar-distributed unit quaternion.
inline Eigen::Quaterniond random_rotation(SplitMix64& rng) {
  const double two_pi = 2 * std::numbers::pi;
  double u1 = rng.uniform();
  double u2 = rng.uniform();
  double u3 = rng.uniform();
  double a = std::sqrt(1.0 - u1);
  double b = std::sqrt(u1);
  return Eigen::Quaterniond(a * std::sin(two_pi * u2), a * std::cos(two_pi * u2),
                            b * std::sin(two_pi * u3), b * std::cos(two_pi * u3));
}

}  // namespace dipsim
