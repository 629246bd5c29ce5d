#include "bmloop/conditioned_bm.hpp"

#include <algorithm>
#include <string>

#include "bmloop/geometry.hpp"
#include "bmloop/rng.hpp"
#include "bmloop/sle.hpp"

namespace bmloop {

void CbmConfig::validate() const {
  if (!(h > 0.0 && h <= 1e-4)) throw std::invalid_argument("CbmConfig: h must lie in (0, 1e-4]");
  if (!(stop_radius > 0.0 && stop_radius < 1.0)) throw std::invalid_argument("CbmConfig: stop_radius must lie in (0, 1)");
  if (!(boundary_factor > 0.0) || !std::isfinite(boundary_factor))
    throw std::invalid_argument("CbmConfig: boundary_factor must be positive");
  if (!(arrival_radius > 0.0)) throw std::invalid_argument("CbmConfig: arrival_radius must be positive");
  if (!(max_u > 0.0)) throw std::invalid_argument("CbmConfig: max_u must be positive");
}

namespace {

[[noreturn]] void step_cap(const char* who, const CbmConfig& cfg, Complex last) {
  throw CbmStepCapExceeded(std::string(who) + ": no exit within " + std::to_string(cfg.max_steps) +
                           " steps (last point " + std::to_string(last.real()) + " + " +
                           std::to_string(last.imag()) + "i, |z| = " + std::to_string(std::abs(last)) + ")");
}

}  // namespace

TimedPath sample_cbm_sde(const CbmConfig& cfg) {
  cfg.validate();
  const Complex rho = cfg.rho.value();
  const double c2 = cfg.boundary_factor * cfg.boundary_factor;
  Rng rng(cfg.seed);
  TimedPath path;
  path.reserve(8192);
  Complex z{0.0, 0.0};
  double t = 0.0;
  path.push_back(t, z);
  for (std::uint64_t step = 0; step < cfg.max_steps; ++step) {
    const double d = 1.0 - std::abs(z);
    const double h = std::min(cfg.h, c2 * d * d);
    z += geometry::detail::cbm_drift(rho, z) * h + std::sqrt(h) * rng.complex_normal();
    t += h;
    path.push_back(t, z);
    if (!(std::abs(z) < cfg.stop_radius)) return path;
  }
  step_cap("sample_cbm_sde", cfg, z);
}

HalfPlanePath simulate_halfplane(const CbmConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  HalfPlanePath p;
  p.u.reserve(8192);
  p.z.reserve(8192);
  p.v.reserve(8192);
  const double sqrt_h = std::sqrt(cfg.h);
  const double stop_sq = cfg.stop_radius * cfg.stop_radius;

  double re = 1.0, im = 0.0, u = 0.0, v = 0.0;
  auto speed = [](double x, double y) {  // 4 |Z + 1|^{-4}
    const double q = (x + 1.0) * (x + 1.0) + y * y;
    return 4.0 / (q * q);
  };
  double f = speed(re, im);
  p.u.push_back(u);
  p.z.emplace_back(re, im);
  p.v.push_back(v);
  for (std::uint64_t step = 0; step < cfg.max_steps; ++step) {
    // Disk-scale step sqrt(h_disk) = min(sqrt h, c d); |V'(Z)| = 2 / |Z + 1|^2.
    const double q_plus = (re + 1.0) * (re + 1.0) + im * im;
    const double q_minus = (re - 1.0) * (re - 1.0) + im * im;
    const double d = 1.0 - std::sqrt(q_minus / q_plus);
    double s = std::min(sqrt_h, cfg.boundary_factor * d) * q_plus / 2.0;
    double hz = s * s;
    const bool horizon = u + hz >= cfg.max_u;
    if (horizon) {
      hz = cfg.max_u - u;
      s = std::sqrt(hz);
    }

    const double a = re + s * rng.normal();
    const double b = s * rng.normal();
    const double c = s * rng.normal();
    re = std::sqrt(a * a + b * b + c * c);
    im += s * rng.normal();
    u += hz;
    const double f_next = speed(re, im);
    v += 0.5 * (f + f_next) * hz;
    f = f_next;
    p.u.push_back(u);
    p.z.emplace_back(re, im);
    p.v.push_back(v);

    const double qp = (re + 1.0) * (re + 1.0) + im * im;
    const double qm = (re - 1.0) * (re - 1.0) + im * im;
    if (horizon || !(qm < stop_sq * qp)) return p;
  }
  step_cap("simulate_halfplane", cfg, p.z.back());
}

TimedPath halfplane_to_disk(const HalfPlanePath& path, Complex pole) {
  TimedPath out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out.push_back(path.v[i], geometry::detail::mobius_v(pole, path.z[i]));
  return out;
}

TimedPath sample_cbm_halfplane(const CbmConfig& cfg) {
  return halfplane_to_disk(simulate_halfplane(cfg), cfg.rho.value());
}

std::vector<double> recover_u_clock(const TimedPath& disk_path, Complex pole) {
  std::vector<double> u(disk_path.size(), 0.0);
  auto weight = [&](Complex z) {
    const double q = std::norm(pole - z);
    return 4.0 / (q * q);
  };
  for (std::size_t i = 1; i < disk_path.size(); ++i) {
    const double dv = disk_path.times[i] - disk_path.times[i - 1];
    u[i] = u[i - 1] + 0.5 * (weight(disk_path.points[i - 1]) + weight(disk_path.points[i])) * dv;
  }
  return u;
}

TimedPath sample_cbm_slit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg) {
  const HalfPlanePath hp = simulate_halfplane(cfg);
  const Complex tip = chain.tip_unit(k);
  TimedPath out;
  out.reserve(hp.size());
  for (std::size_t i = 0; i < hp.size(); ++i) {
    const Complex w = geometry::detail::mobius_v(tip, hp.z[i]);
    out.push_back(hp.v[i], chain.eval_inverse(w, k));
  }
  return out;
}

std::optional<Complex> slit_first_exit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg,
                                       double radius) {
  const HalfPlanePath hp = simulate_halfplane(cfg);
  const Complex tip = chain.tip_unit(k);
  Complex prev = chain.eval_inverse(geometry::detail::mobius_v(tip, hp.z[0]), k);
  for (std::size_t i = 1; i < hp.size(); ++i) {
    const Complex z = chain.eval_inverse(geometry::detail::mobius_v(tip, hp.z[i]), k);
    if (std::abs(z) >= radius) return circle_crossing(z, prev, radius);
    prev = z;
  }
  return std::nullopt;
}

Complex slit_euler_first_exit(const LoewnerChain& chain, std::size_t k, const CbmConfig& cfg, double radius) {
  cfg.validate();
  if (!(radius > 0.0 && radius < 1.0)) throw std::invalid_argument("slit_euler_first_exit: radius must lie in (0, 1)");
  const Complex tip = chain.tip_unit(k);
  const double c2 = cfg.boundary_factor * cfg.boundary_factor;
  Rng rng(cfg.seed);
  Complex z{0.0, 0.0};
  for (std::uint64_t step = 0; step < cfg.max_steps; ++step) {
    const ForwardResult g = chain.eval_derivative(z, k);
    if (g.swallowed) throw std::runtime_error("slit_euler_first_exit: path reached the slit");
    const Complex diff = tip - g.value;
    const Complex f_prime = 2.0 * tip / (diff * diff) * g.derivative;
    const double q = ((tip + g.value) / diff).real();
    const Complex drift = std::conj(f_prime) / q;
    const double h = std::min(cfg.h, c2 / std::norm(drift));
    const Complex next = z + drift * h + std::sqrt(h) * rng.complex_normal();
    if (std::abs(next) >= radius) return circle_crossing(next, z, radius);
    z = next;
  }
  step_cap("slit_euler_first_exit", cfg, z);
}

}  // namespace bmloop
