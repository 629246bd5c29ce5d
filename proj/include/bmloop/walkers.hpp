#pragma once

// Simple random walk on the lattice mesh * Z^2 started at the origin and
// stopped at the first vertex with |z| >= 1, and its loop-erasure.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bmloop/loop_erasure.hpp"

namespace bmloop {

struct LatticeConfig {
  double mesh = 0.01;
  std::uint64_t max_steps = 1'000'000;

  /// Throws std::invalid_argument unless 0 < mesh <= 0.1 and
  /// max_steps >= 10 / mesh^2. Seeded samplers require this.
  void validate() const;
  /// Weaker check used with caller-supplied move sequences: 0 < mesh <= 1.
  void validate_geometry() const;
};

struct LatticePoint {
  std::int32_t x = 0;
  std::int32_t y = 0;
  bool operator==(const LatticePoint&) const = default;
};

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) ^
                                      static_cast<std::uint32_t>(p.y));
  }
};

/// The walk ran out of steps before reaching |z| >= 1.
class StepCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Move source returning a direction 0..3 (E, N, W, S); the seeded samplers
/// use Rng::direction4, tests can substitute a fixed sequence.
using MoveSource = std::function<unsigned()>;

/// Walk in integer coordinates (multiply by mesh for the plane).
std::vector<LatticePoint> sample_srw_lattice(const LatticeConfig& cfg, const MoveSource& moves);
std::vector<LatticePoint> sample_srw_lattice(const LatticeConfig& cfg, std::uint64_t seed);

DiscretePath to_plane(std::span<const LatticePoint> walk, double mesh);

/// Walk as plane points; last vertex is the exit vertex.
DiscretePath sample_srw(const LatticeConfig& cfg, std::uint64_t seed);
DiscretePath sample_srw(const LatticeConfig& cfg, const MoveSource& moves);

struct LerwSample {
  DiscretePath walk;
  ErasureResult erased;
};

LerwSample lerw_curve(const LatticeConfig& cfg, std::uint64_t seed);
LerwSample lerw_curve(const LatticeConfig& cfg, const MoveSource& moves);

/// Loop-erasure specialised to lattice walks: last visits are tracked in a
/// dense array over the bounding box instead of a hash map.
BasicErasureResult<LatticePoint> erase_lattice_loops(std::span<const LatticePoint> walk);

}  // namespace bmloop
