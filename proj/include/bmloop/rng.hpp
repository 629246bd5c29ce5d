#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bmloop/types.hpp"

namespace bmloop {

/// SplitMix64 finalizer; used to derive independent replica seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// seed_i = mix(base_seed, replica_index). Distinct streams also take a
/// `stream` tag so that e.g. the SLE and Brownian parts of a joint sample
/// never share a generator.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream = 0) {
  return splitmix64(splitmix64(base ^ splitmix64(stream + 0x632be59bd9b4e019ULL)) + index);
}

/// Seeded 64-bit generator (mt19937_64) with the few draws the samplers need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  Complex complex_normal() {
    const double a = normal_(engine_);
    const double b = normal_(engine_);
    return {a, b};
  }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in {0, 1, 2, 3} from the top bits.
  unsigned direction4() { return static_cast<unsigned>(engine_() >> 62); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace bmloop
