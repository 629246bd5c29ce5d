#include "bmloop/loewner.hpp"

#include <string>

#include "bmloop/geometry.hpp"

namespace bmloop {

void DrivingFunction::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("DrivingFunction: dt must be positive");
  if (values.empty()) throw std::invalid_argument("DrivingFunction: no samples");
  for (const double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("DrivingFunction: non-finite driving value");
}

LoewnerChain::LoewnerChain(double dt, double xi0)
    : dt_(dt), exp_dt_(std::exp(dt)), exp_neg_dt_(std::exp(-dt)), xi_{xi0} {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("LoewnerChain: dt must be positive");
  if (!std::isfinite(xi0)) throw std::invalid_argument("LoewnerChain: non-finite driving value");
}

LoewnerChain LoewnerChain::from_driving(const DrivingFunction& driving) {
  driving.validate();
  LoewnerChain chain(driving.dt, driving.values.front());
  chain.xi_.reserve(driving.values.size());
  chain.theta_.reserve(driving.steps());
  chain.unit_.reserve(driving.steps());
  for (std::size_t k = 1; k < driving.values.size(); ++k) chain.advance(driving.values[k]);
  return chain;
}

void LoewnerChain::advance(double xi_next) {
  if (!std::isfinite(xi_next)) throw std::invalid_argument("LoewnerChain::advance: non-finite driving value");
  const double theta = 0.5 * (xi_.back() + xi_next);
  xi_.push_back(xi_next);
  theta_.push_back(theta);
  unit_.push_back(std::polar(1.0, theta));
}

std::size_t LoewnerChain::step_at(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("LoewnerChain::step_at: negative time");
  const double k = std::round(t / dt_);
  if (std::abs(t - k * dt_) > 1e-6 * dt_)
    throw std::invalid_argument("LoewnerChain::step_at: time " + std::to_string(t) + " is off the grid");
  if (k > static_cast<double>(steps())) throw std::out_of_range("LoewnerChain::step_at: time past the horizon");
  return static_cast<std::size_t>(k);
}

double LoewnerChain::conformal_radius_factor(std::size_t k) const {
  if (k > steps()) throw std::out_of_range("LoewnerChain: step past the horizon");
  return std::exp(dt_ * static_cast<double>(k));
}

namespace {

template <bool WithDerivative>
ForwardResult push_forward(Complex z, std::size_t upto, std::span<const Complex> units, double exp_dt,
                           double swallow) {
  ForwardResult out;
  out.value = z;
  if (!is_finite(z) || !(std::norm(z) < 1.0)) throw std::domain_error("LoewnerChain: requires |z| < 1");
  Complex g = z;
  Complex d{1.0, 0.0};
  const double swallow_sq = swallow * swallow;
  for (std::size_t k = 0; k < upto; ++k) {
    const Complex u = units[k];
    const Complex h = g * std::conj(u);
    const Complex next = loewner_step::forward(h, exp_dt);
    if (!is_finite(next) || std::norm(next - 1.0) < swallow_sq || !(std::norm(next) < 1.0)) {
      out.value = g;
      out.derivative = d;
      out.steps_survived = k;
      out.swallowed = true;
      return out;
    }
    if constexpr (WithDerivative) d *= loewner_step::forward_derivative(h, next, exp_dt);
    g = next * u;
  }
  out.value = g;
  out.derivative = d;
  out.steps_survived = upto;
  return out;
}

}  // namespace

ForwardResult LoewnerChain::eval_forward(Complex z, std::size_t upto) const {
  if (upto > steps()) throw std::out_of_range("LoewnerChain::eval_forward: past the horizon");
  return push_forward<false>(z, upto, unit_, exp_dt_, swallow_distance());
}

ForwardResult LoewnerChain::eval_derivative(Complex z, std::size_t upto) const {
  if (upto > steps()) throw std::out_of_range("LoewnerChain::eval_derivative: past the horizon");
  return push_forward<true>(z, upto, unit_, exp_dt_, swallow_distance());
}

Complex LoewnerChain::eval_inverse(Complex w, std::size_t upto) const {
  if (upto > steps()) throw std::out_of_range("LoewnerChain::eval_inverse: past the horizon");
  if (!is_finite(w) || std::norm(w) > 1.0 + 1e-12) throw std::domain_error("LoewnerChain::eval_inverse: requires |w| <= 1");
  for (std::size_t k = upto; k-- > 0;) {
    const Complex u = unit_[k];
    w = loewner_step::inverse(w * std::conj(u), exp_neg_dt_) * u;
  }
  return w;
}

Complex LoewnerChain::trace_point(std::size_t k) const {
  if (k > steps()) throw std::out_of_range("LoewnerChain::trace_point: past the horizon");
  if (k == 0) return std::polar(1.0, xi_[0]);
  return eval_inverse(unit_[k - 1], k);
}

std::optional<double> LoewnerChain::q_observable(Complex z, std::size_t upto) const {
  const ForwardResult r = eval_forward(z, upto);
  if (r.swallowed) return std::nullopt;
  return geometry::detail::poisson_kernel(tip_unit(upto), r.value);
}

double LoewnerChain::q_stopped(Complex z, std::size_t upto) const {
  const ForwardResult r = eval_forward(z, upto);
  return geometry::detail::poisson_kernel(tip_unit(r.steps_survived), r.value);
}

LoewnerChain LoewnerChain::truncated(std::size_t k) const {
  if (k > steps()) throw std::out_of_range("LoewnerChain::truncated: past the horizon");
  LoewnerChain out(dt_, xi_[0]);
  out.xi_.assign(xi_.begin(), xi_.begin() + static_cast<std::ptrdiff_t>(k + 1));
  out.theta_.assign(theta_.begin(), theta_.begin() + static_cast<std::ptrdiff_t>(k));
  out.unit_.assign(unit_.begin(), unit_.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

nlohmann::json LoewnerChain::to_json() const { return {{"dt", dt_}, {"driving", xi_}}; }

LoewnerChain LoewnerChain::from_json(const nlohmann::json& j) {
  DrivingFunction d;
  d.dt = j.at("dt").get<double>();
  d.values = j.at("driving").get<std::vector<double>>();
  return from_driving(d);
}

}  // namespace bmloop
