#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bmloop {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w - kPi;
}

/// A point rho = e^{i angle} of the unit circle. Stored as the angle so that
/// |rho| = 1 holds exactly; value() is recomputed on demand.
class BoundaryPoint {
 public:
  BoundaryPoint() = default;
  explicit BoundaryPoint(double angle) {
    if (!std::isfinite(angle)) throw std::invalid_argument("BoundaryPoint: non-finite angle");
    angle_ = std::fmod(angle, kTwoPi);
    if (angle_ < 0.0) angle_ += kTwoPi;
    if (angle_ >= kTwoPi) angle_ = 0.0;
  }

  double angle() const { return angle_; }
  Complex value() const { return std::polar(1.0, angle_); }

  friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;

 private:
  double angle_ = 0.0;
};

/// A finitely sampled curve: strictly increasing times paired with points.
struct TimedPath {
  std::vector<double> times;
  std::vector<Complex> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(double t, Complex z) {
    times.push_back(t);
    points.push_back(z);
  }
  void reserve(std::size_t n) {
    times.reserve(n);
    points.reserve(n);
  }
  const Complex& front() const { return points.front(); }
  const Complex& back() const { return points.back(); }

  /// Throws std::invalid_argument unless lengths match, times strictly
  /// increase and every point is finite. The last time may be +inf (reversed
  /// curves end at time infinity).
  void validate() const {
    if (times.size() != points.size()) throw std::invalid_argument("TimedPath: length mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const bool last_at_infinity = i + 1 == times.size() && times[i] == INFINITY;
      if (!is_finite(points[i]) || (std::isnan(times[i]) || (std::isinf(times[i]) && !last_at_infinity)))
        throw std::invalid_argument("TimedPath: non-finite sample");
      if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("TimedPath: times not strictly increasing");
    }
  }
};

}  // namespace bmloop
