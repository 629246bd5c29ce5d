#pragma once

// Radial SLE_kappa: driving xi = sqrt(kappa) B sampled on a uniform grid, the
// Loewner chain it generates, and the trace read off at the tip.

#include <cstdint>
#include <optional>
#include <span>

#include "bmloop/loewner.hpp"

namespace bmloop {

struct SleConfig {
  double kappa = 2.0;
  double T = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;

  std::size_t steps() const;
  /// kappa >= 0, T >= 0, 0 < dt <= 1e-3 and T a whole number of steps.
  void validate() const;
  /// validate() plus kappa <= 4 (simple traces).
  void validate_trace() const;
};

/// xi(k dt) = sqrt(kappa) * (sum of k iid N(0, dt)); xi(0) = 0.
DrivingFunction sample_driving(const SleConfig& cfg);
LoewnerChain sample_chain(const SleConfig& cfg);

/// beta(t_k) for k = 0..steps, one inverse composition per grid point.
TimedPath trace_of(const LoewnerChain& chain, unsigned threads = 1);
TimedPath sample_trace(const SleConfig& cfg, unsigned threads = 1);

struct RadiusHit {
  std::size_t step = 0;  // first grid index with |beta| <= r
  Complex point;         // beta at that index
  Complex crossing;      // point of |z| = r on the segment from the previous sample
};

/// First grid time at which the trace enters the closed disk of radius r.
/// Trace points are evaluated every `stride` steps and intervals that come
/// close to the circle (relative to their own displacement) are rescanned
/// step by step, so the cost is about n^2 / (2 stride) inverse steps.
std::optional<RadiusHit> first_hit_radius(const LoewnerChain& chain, double r, std::size_t stride = 16);

/// Point of |z| = r on the segment a -> b, assuming |a| > r >= |b|.
Complex circle_crossing(Complex a, Complex b, double r);

/// Argument of the point where the polyline first enters |z| <= r.
std::optional<double> first_crossing_angle(std::span<const Complex> path, double r);

/// Number of pairs of non-adjacent polyline segments that intersect.
std::size_t count_self_crossings(std::span<const Complex> path);

/// Minimum |p_i - p_j| over |i - j| > gap.
double min_separation(std::span<const Complex> path, std::size_t gap);

}  // namespace bmloop
