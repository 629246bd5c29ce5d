#pragma once

// Analytic primitives on the unit disk: normalized Poisson kernels, the
// Moebius pair W_rho / V_rho between the disk and the right half-plane, the
// drift of Brownian motion conditioned to exit at rho, and the Groetzsch ring
// modulus used for distortion bounds.

#include "bmloop/types.hpp"

namespace bmloop::geometry {

/// Normalized Poisson kernel with pole rho: Re((rho + z) / (rho - z)).
/// Equals 1 at the origin. Throws std::domain_error unless |z| < 1.
double poisson_kernel(BoundaryPoint rho, Complex z);

/// W_rho(z) = (rho + z) / (rho - z); maps the disk onto {Re w > 0}.
Complex mobius_w(BoundaryPoint rho, Complex z);

/// V_rho(w) = rho (w - 1) / (w + 1), the inverse of mobius_w.
Complex mobius_v(BoundaryPoint rho, Complex w);

/// |V_rho'(w)| = 2 / |w + 1|^2 (independent of rho).
double mobius_v_speed(Complex w);

/// Drift 2 d_zbar P_rho / P_rho = conj(2 rho / (rho - z)^2) / P_rho(z).
Complex cbm_drift(BoundaryPoint rho, Complex z);

/// Complete elliptic integral of the first kind K(k), modulus convention,
/// by the arithmetic-geometric mean. Requires 0 <= k < 1.
double elliptic_k(double k);

/// mu(r) = (pi/2) K(sqrt(1 - r^2)) / K(r), 0 < r < 1.
double grotzsch_mu(double r);

/// Conformal modulus of D \ [0, r], i.e. mu(r) / (2 pi). Strictly decreasing.
double grotzsch_modulus(double r);

/// The r in (0,1) with grotzsch_modulus(r) = m, by bisection on
/// [1e-12, 1 - 1e-12]. Throws std::domain_error if m is outside the range
/// the bracket can represent.
double grotzsch_inverse(double m);

/// Modulus (1 / 2pi) ln(r2 / r1) of the annulus r1 < |z| < r2.
double annulus_modulus(double r1, double r2);

/// Bound ln((1 + r) / (1 - r)) on |ln P_rho(z)| for |z| <= r.
double poisson_log_bound(double r);

/// Periodic trapezoidal average of P_rho over the circle |z| = r.
double poisson_circle_mean(BoundaryPoint rho, double r, std::size_t nodes = 1024);

namespace detail {

// Unchecked hot-loop forms taking the pole as a complex unit.
inline Complex mobius_w(Complex rho, Complex z) { return (rho + z) / (rho - z); }
inline double poisson_kernel(Complex rho, Complex z) { return mobius_w(rho, z).real(); }
inline Complex cbm_drift(Complex rho, Complex z) {
  const Complex d = rho - z;
  return std::conj(2.0 * rho / (d * d)) / poisson_kernel(rho, z);
}
inline Complex mobius_v(Complex rho, Complex w) { return rho * (w - 1.0) / (w + 1.0); }

}  // namespace detail

}  // namespace bmloop::geometry
