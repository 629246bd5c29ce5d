#pragma once

// Radial Loewner chains with piecewise-constant driving.
//
// Over one step of length dt with the driving frozen at angle theta, the
// radial Loewner flow d/dt g = g (u + g) / (u - g), u = e^{i theta}, is solved
// in closed form: with h = g / u and the Koebe-type map f(h) = h / (1 + h)^2,
//
//     f(h(t + dt)) = e^{dt} f(h(t)).
//
// f is univalent on the disk with image C \ [1/4, inf), so both the forward
// step and its inverse are explicit (principal square root). The inverse
// extends continuously to the unit circle, which is how the trace is read off
// at the driving point: the boundary point u maps onto the tip of the slit
// added during that step.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "bmloop/types.hpp"

namespace bmloop {

/// Sampled driving process xi(k dt), k = 0..n, in radians.
struct DrivingFunction {
  double dt = 1e-3;
  std::vector<double> values{0.0};

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double horizon() const { return dt * static_cast<double>(steps()); }
  /// Throws std::invalid_argument unless dt > 0, values non-empty and finite.
  void validate() const;
};

namespace loewner_step {

inline Complex koebe(Complex h) {
  const Complex s = 1.0 + h;
  return h / (s * s);
}

/// Inverse of koebe on C \ [1/4, inf); on the cut returns the root on the
/// unit circle with |h| <= 1.
inline Complex koebe_inverse(Complex c) {
  const Complex s = std::sqrt(1.0 - 4.0 * c);
  Complex h = 2.0 * c / (1.0 - 2.0 * c + s);
  if (std::norm(h) > 1.0) h = 1.0 / h;
  return h;
}

/// One step of the flow driven at 1 for time dt (exp_dt = e^{dt}).
inline Complex forward(Complex h, double exp_dt) { return koebe_inverse(exp_dt * koebe(h)); }
/// Inverse step (exp_neg_dt = e^{-dt}); defined on the closed disk.
inline Complex inverse(Complex h, double exp_neg_dt) { return koebe_inverse(exp_neg_dt * koebe(h)); }
/// d forward / dh at h, given the image h_next = forward(h).
inline Complex forward_derivative(Complex h, Complex h_next, double exp_dt) {
  // koebe'(h) = (1 - h) / (1 + h)^3
  const Complex a = 1.0 + h;
  const Complex b = 1.0 + h_next;
  return exp_dt * ((1.0 - h) / (a * a * a)) * ((b * b * b) / (1.0 - h_next));
}

}  // namespace loewner_step

/// Outcome of pushing a point through the forward maps.
struct ForwardResult {
  Complex value;                 // g_t(z) at the last surviving step
  Complex derivative{1.0, 0.0};  // g_t'(z) at that step (eval_derivative only)
  std::size_t steps_survived = 0;
  bool swallowed = false;        // z left D_t at step steps_survived + 1

  /// Grid time t* of swallowing in units of steps (only if swallowed).
  std::size_t swallow_step() const { return steps_survived + 1; }
};

/// Composition of one-step radial slit maps representing g_t on the grid
/// t_k = k dt. Step k (1-based) is driven by the frozen angle
/// theta_k = (xi_{k-1} + xi_k) / 2. The chain is append-only; evaluations are
/// const and safe to run concurrently.
class LoewnerChain {
 public:
  explicit LoewnerChain(double dt, double xi0 = 0.0);
  static LoewnerChain from_driving(const DrivingFunction& driving);

  /// Appends one step of length dt ending at driving value xi_next.
  void advance(double xi_next);

  double dt() const { return dt_; }
  std::size_t steps() const { return theta_.size(); }
  double horizon() const { return dt_ * static_cast<double>(steps()); }
  /// Grid index of time t; throws std::out_of_range past the horizon and
  /// std::invalid_argument if t is not within 1e-9 dt of a grid point.
  std::size_t step_at(double t) const;

  /// xi(t_k), k = 0..steps().
  double driving(std::size_t k) const { return xi_[k]; }
  const std::vector<double>& driving_values() const { return xi_; }
  /// Angle of the driving point of g_{t_k} (the image of the tip); equals
  /// xi(0) at k = 0 and theta_k afterwards.
  double tip_angle(std::size_t k) const { return k == 0 ? xi_[0] : theta_[k - 1]; }
  Complex tip_unit(std::size_t k) const { return k == 0 ? std::polar(1.0, xi_[0]) : unit_[k - 1]; }

  /// e^{t_k}, the exact conformal radius factor g_t'(0) of the chain.
  double conformal_radius_factor(std::size_t k) const;

  /// Swallowing threshold 1e-3 sqrt(dt) for |g_t(z) - e^{i theta}|.
  double swallow_distance() const { return 1e-3 * std::sqrt(dt_); }
  /// Trace resolution scale 10 sqrt(dt).
  double trace_resolution() const { return 10.0 * std::sqrt(dt_); }

  /// g_{t_k}(z) for |z| < 1, stopping when z is swallowed.
  ForwardResult eval_forward(Complex z, std::size_t upto) const;
  ForwardResult eval_forward(Complex z) const { return eval_forward(z, steps()); }
  /// As eval_forward, also accumulating g_{t_k}'(z).
  ForwardResult eval_derivative(Complex z, std::size_t upto) const;

  /// g_{t_k}^{-1}(w) for |w| <= 1; on the circle this is the boundary limit.
  Complex eval_inverse(Complex w, std::size_t upto) const;
  Complex eval_inverse(Complex w) const { return eval_inverse(w, steps()); }

  /// Tip of the hull at t_k: g_{t_k}^{-1}(e^{i theta_k}); beta(0) = 1 (for xi0 = 0).
  Complex trace_point(std::size_t k) const;

  /// Q_t(z) = P_{e^{i theta}}(g_t(z)); empty if z is swallowed by t.
  std::optional<double> q_observable(Complex z, std::size_t upto) const;
  /// Q at the last grid time before swallowing (or at upto if z survives).
  double q_stopped(Complex z, std::size_t upto) const;

  /// Copy of the first k steps.
  LoewnerChain truncated(std::size_t k) const;

  nlohmann::json to_json() const;
  static LoewnerChain from_json(const nlohmann::json& j);

 private:
  double dt_;
  double exp_dt_;
  double exp_neg_dt_;
  std::vector<double> xi_;      // xi(t_0..t_n)
  std::vector<double> theta_;   // frozen angle per step
  std::vector<Complex> unit_;   // e^{i theta} per step
};

}  // namespace bmloop
