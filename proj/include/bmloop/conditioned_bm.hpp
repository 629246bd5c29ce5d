#pragma once

// Brownian motion in the disk started at 0 and conditioned to exit at a
// boundary point rho, by three routes:
//
//  * Euler-Maruyama for dB = dW + conj(2 rho / (rho - B)^2) / P_rho(B) dt;
//  * the half-plane picture: W_rho(B) is, after the time change
//    du = |W_rho'(B)|^2 dt, a process Z = R + iY with R a Bessel(3) process
//    from 1 and Y an independent Brownian motion. Both parts have exact
//    Gaussian transitions, so this route has no time-discretization bias;
//  * in a slit domain D_t = D \ beta(0, t], the same construction composed
//    with g_t^{-1}, which conditions the path to exit at the tip beta(t).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bmloop/loewner.hpp"
#include "bmloop/types.hpp"

namespace bmloop {

struct CbmConfig {
  BoundaryPoint rho{0.0};
  double h = 1e-4;               // base step in disk time
  double stop_radius = 1.0 - 1e-3;
  double arrival_radius = 5e-3;  // eps_hit
  std::uint64_t seed = 0;
  // Near the circle the disk-time step is min(h, (c d)^2) with d the distance
  // to the circle (or, for the slit-domain Euler scheme, 1 / |drift|).
  double boundary_factor = 0.1;
  std::uint64_t max_steps = 20'000'000;
  // Half-plane clock horizon: simulate_halfplane also stops at u = max_u,
  // shortening the last step to land on it exactly.
  double max_u = INFINITY;

  /// 0 < h <= 1e-4, 0 < stop_radius < 1, boundary_factor > 0,
  /// arrival_radius > 0, max_u > 0.
  void validate() const;
};

class CbmStepCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euler-Maruyama path from 0, stopped at the first sample with
/// |z| >= stop_radius. Times are disk times.
TimedPath sample_cbm_sde(const CbmConfig& cfg);

/// Z = R + iY in the right half-plane from Z = 1 on its own clock u, with
/// the disk clock v = int 4 |Z + 1|^{-4} du accumulated by the trapezoid rule.
/// Stops once |V(Z)| >= stop_radius (|V_rho(Z)| does not depend on rho) or
/// u reaches max_u.
struct HalfPlanePath {
  std::vector<double> u;
  std::vector<Complex> z;
  std::vector<double> v;

  std::size_t size() const { return z.size(); }
};

HalfPlanePath simulate_halfplane(const CbmConfig& cfg);

/// V_pole(Z) parametrized by the disk clock v.
TimedPath halfplane_to_disk(const HalfPlanePath& path, Complex pole);

/// Exact-route sample of B^rho: V_rho(Z(u(t))).
TimedPath sample_cbm_halfplane(const CbmConfig& cfg);

/// u recomputed from the disk path: trapezoid of |W_rho'(z)|^2 = 4 / |rho - z|^4
/// over the disk clock. Equals path.u up to quadrature error.
std::vector<double> recover_u_clock(const TimedPath& disk_path, Complex pole);

/// Brownian motion in D_{t_k} conditioned to exit at beta(t_k): the
/// half-plane path mapped by g_{t_k}^{-1} o V_{tip}. Times are the disk clock
/// of the image disk; the curve is meant as an ordered point set. cfg.rho is
/// ignored (the pole is the tip).
TimedPath sample_cbm_slit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg);

/// As sample_cbm_slit but only mapped back until the first sample with
/// |z| >= radius; returns the crossing point of |z| = radius on the last
/// segment, or nothing if the path stops first.
std::optional<Complex> slit_first_exit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg, double radius);

/// Euler scheme for the slit-domain SDE dB = dW + conj(F'(B)) / Re F(B) dt
/// with F = W_tip o g_{t_k}, from 0 until |z| >= radius. Returns the crossing
/// point of |z| = radius.
Complex slit_euler_first_exit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg, double radius);

}  // namespace bmloop
