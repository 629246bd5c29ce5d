#include "bmloop/sle.hpp"

#include <algorithm>
#include <limits>

#include "bmloop/parallel.hpp"
#include "bmloop/rng.hpp"

namespace bmloop {

std::size_t SleConfig::steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

void SleConfig::validate() const {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("SleConfig: kappa must be >= 0");
  if (!(dt > 0.0 && dt <= 1e-3)) throw std::invalid_argument("SleConfig: dt must lie in (0, 1e-3]");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("SleConfig: T must be >= 0");
  if (std::abs(T - static_cast<double>(steps()) * dt) > 1e-6 * dt)
    throw std::invalid_argument("SleConfig: T must be a multiple of dt");
}

void SleConfig::validate_trace() const {
  validate();
  if (kappa > 4.0) throw std::invalid_argument("SleConfig: traces require kappa <= 4");
}

DrivingFunction sample_driving(const SleConfig& cfg) {
  cfg.validate();
  DrivingFunction d;
  d.dt = cfg.dt;
  const std::size_t n = cfg.steps();
  d.values.assign(n + 1, 0.0);
  Rng rng(cfg.seed);
  const double scale = std::sqrt(cfg.kappa * cfg.dt);
  double xi = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    xi += scale * rng.normal();
    d.values[k] = xi;
  }
  return d;
}

LoewnerChain sample_chain(const SleConfig& cfg) { return LoewnerChain::from_driving(sample_driving(cfg)); }

TimedPath trace_of(const LoewnerChain& chain, unsigned threads) {
  const std::size_t n = chain.steps() + 1;
  // Later points cost more; hand them out in reverse to even out the load.
  auto pts = parallel_map(n, threads, [&](std::size_t i) { return chain.trace_point(n - 1 - i); });
  TimedPath out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(chain.dt() * static_cast<double>(k), pts[n - 1 - k]);
  return out;
}

TimedPath sample_trace(const SleConfig& cfg, unsigned threads) {
  cfg.validate_trace();
  return trace_of(sample_chain(cfg), threads);
}

Complex circle_crossing(Complex a, Complex b, double r) {
  // |a + s (b - a)|^2 = r^2, take the root in [0, 1] nearest a.
  const Complex d = b - a;
  const double qa = std::norm(d);
  if (qa == 0.0) return b;
  const double qb = 2.0 * (a.real() * d.real() + a.imag() * d.imag());
  const double qc = std::norm(a) - r * r;
  const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
  const double s = std::clamp((-qb - std::sqrt(disc)) / (2.0 * qa), 0.0, 1.0);
  return a + s * d;
}

std::optional<RadiusHit> first_hit_radius(const LoewnerChain& chain, double r, std::size_t stride) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("first_hit_radius: r must lie in (0, 1)");
  if (stride == 0) throw std::invalid_argument("first_hit_radius: stride must be positive");
  const std::size_t n = chain.steps();
  const double slack = 0.25 * chain.trace_resolution();

  auto hit_at = [&](std::size_t k, Complex prev, Complex cur) {
    return RadiusHit{k, cur, circle_crossing(prev, cur, r)};
  };

  Complex a = chain.trace_point(0);
  if (std::abs(a) <= r) return RadiusHit{0, a, a};
  for (std::size_t lo = 0; lo < n;) {
    const std::size_t hi = std::min(n, lo + stride);
    const Complex b = chain.trace_point(hi);
    const double margin = 2.0 * std::abs(b - a) + slack;
    if (hi == lo + 1 || std::abs(b) <= r || std::min(std::abs(a), std::abs(b)) - r <= margin) {
      Complex prev = a;
      for (std::size_t k = lo + 1; k <= hi; ++k) {
        const Complex cur = k == hi ? b : chain.trace_point(k);
        if (std::abs(cur) <= r) return hit_at(k, prev, cur);
        prev = cur;
      }
    }
    a = b;
    lo = hi;
  }
  return std::nullopt;
}

std::optional<double> first_crossing_angle(std::span<const Complex> path, double r) {
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (std::abs(path[k]) <= r) {
      const Complex p = k == 0 ? path[0] : circle_crossing(path[k - 1], path[k], r);
      return std::arg(p);
    }
  }
  return std::nullopt;
}

namespace {

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool on_segment(Complex p, Complex a, Complex b) {
  return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
         std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
}

bool segments_intersect(Complex p1, Complex p2, Complex q1, Complex q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

}  // namespace

std::size_t count_self_crossings(std::span<const Complex> path) {
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    for (std::size_t j = i + 2; j + 1 < path.size(); ++j)
      if (segments_intersect(path[i], path[i + 1], path[j], path[j + 1])) ++count;
  return count;
}

double min_separation(std::span<const Complex> path, std::size_t gap) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i)
    for (std::size_t j = i + gap + 1; j < path.size(); ++j) best = std::min(best, std::abs(path[i] - path[j]));
  return best;
}

}  // namespace bmloop
