#include "bmloop/geometry.hpp"

#include <string>

namespace bmloop::geometry {

namespace {

void require_interior(Complex z, const char* what) {
  if (!is_finite(z) || !(std::norm(z) < 1.0))
    throw std::domain_error(std::string(what) + ": requires |z| < 1");
}

constexpr double kBracketLo = 1e-12;
constexpr double kBracketHi = 1.0 - 1e-12;

}  // namespace

double poisson_kernel(BoundaryPoint rho, Complex z) {
  require_interior(z, "poisson_kernel");
  return detail::poisson_kernel(rho.value(), z);
}

Complex mobius_w(BoundaryPoint rho, Complex z) {
  const Complex r = rho.value();
  if (!is_finite(z) || z == r) throw std::domain_error("mobius_w: z is the pole rho");
  return detail::mobius_w(r, z);
}

Complex mobius_v(BoundaryPoint rho, Complex w) {
  if (!is_finite(w) || w == Complex(-1.0, 0.0)) throw std::domain_error("mobius_v: w = -1 is the pole");
  return detail::mobius_v(rho.value(), w);
}

double mobius_v_speed(Complex w) {
  if (w == Complex(-1.0, 0.0)) throw std::domain_error("mobius_v_speed: w = -1 is the pole");
  return 2.0 / std::norm(w + 1.0);
}

Complex cbm_drift(BoundaryPoint rho, Complex z) {
  require_interior(z, "cbm_drift");
  return detail::cbm_drift(rho.value(), z);
}

namespace {

double agm(double a, double b) {
  // Quadratic convergence: a handful of rounds even for b near 0.
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-15 * a; ++i) {
    const double next_a = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = next_a;
  }
  return 0.5 * (a + b);
}

}  // namespace

double elliptic_k(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw std::domain_error("elliptic_k: requires 0 <= k < 1");
  return 0.5 * kPi / agm(1.0, std::sqrt((1.0 - k) * (1.0 + k)));
}

double grotzsch_mu(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("grotzsch_mu: requires 0 < r < 1");
  // K(r') / K(r) = agm(1, r') / agm(1, r); finite even when r' rounds to 1.
  const double r_conj = std::sqrt((1.0 - r) * (1.0 + r));
  return 0.5 * kPi * agm(1.0, r_conj) / agm(1.0, r);
}

double grotzsch_modulus(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("grotzsch_modulus: requires 0 < r < 1");
  return grotzsch_mu(r) / kTwoPi;
}

double grotzsch_inverse(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw std::domain_error("grotzsch_inverse: requires m > 0");
  double lo = kBracketLo;
  double hi = kBracketHi;
  if (m > grotzsch_modulus(lo) || m < grotzsch_modulus(hi))
    throw std::domain_error("grotzsch_inverse: m outside the representable bracket");
  // Decreasing in r: modulus(lo) >= m >= modulus(hi).
  while (hi - lo > 1e-16) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (grotzsch_modulus(mid) > m)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double annulus_modulus(double r1, double r2) {
  if (!(r1 > 0.0 && r1 < r2)) throw std::domain_error("annulus_modulus: requires 0 < r1 < r2");
  return std::log(r2 / r1) / kTwoPi;
}

double poisson_log_bound(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw std::domain_error("poisson_log_bound: requires 0 <= r < 1");
  return std::log((1.0 + r) / (1.0 - r));
}

double poisson_circle_mean(BoundaryPoint rho, double r, std::size_t nodes) {
  if (!(r >= 0.0 && r < 1.0)) throw std::domain_error("poisson_circle_mean: requires 0 <= r < 1");
  if (nodes == 0) throw std::invalid_argument("poisson_circle_mean: nodes must be positive");
  const Complex pole = rho.value();
  double sum = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    sum += detail::poisson_kernel(pole, std::polar(r, kTwoPi * static_cast<double>(j) / static_cast<double>(nodes)));
  }
  return sum / static_cast<double>(nodes);
}

}  // namespace bmloop::geometry
