#include <doctest.h>

#include <random>

#include "bmloop/geometry.hpp"
#include "bmloop/loewner.hpp"
#include "bmloop/sle.hpp"
#include "oracles.hpp"

using namespace bmloop;

namespace {

double smooth_driving(double t) { return 0.8 * std::sin(3.0 * t) + 0.5 * t; }

LoewnerChain chain_of(const std::function<double(double)>& xi, double dt, std::size_t steps) {
  LoewnerChain c(dt, xi(0.0));
  for (std::size_t k = 1; k <= steps; ++k) c.advance(xi(dt * static_cast<double>(k)));
  return c;
}

LoewnerChain zero_chain(double dt, std::size_t steps) {
  return chain_of([](double) { return 0.0; }, dt, steps);
}

}  // namespace

TEST_CASE("the origin is fixed and the conformal radius is e^t") {
  const auto chain = sample_chain({2.0, 1.0, 1e-4, 5});
  for (std::size_t k : {0ul, 1ul, 10ul, 5000ul, 10000ul}) {
    const auto r = chain.eval_derivative({0.0, 0.0}, k);
    CHECK(std::abs(r.value) == 0.0);
    CHECK_FALSE(r.swallowed);
    const double t = 1e-4 * static_cast<double>(k);
    CHECK(std::abs(r.derivative - std::exp(t)) < 1e-9 * std::exp(t));
    CHECK(chain.conformal_radius_factor(k) == doctest::Approx(std::exp(t)).epsilon(1e-15));
  }
  CHECK(std::abs(zero_chain(1e-3, 1).eval_forward({0.0, 0.0}).value) == 0.0);
}

TEST_CASE("time zero is the identity") {
  const LoewnerChain chain(1e-3);
  const Complex z(0.3, -0.4);
  CHECK(chain.eval_forward(z).value == z);
  CHECK(chain.eval_derivative(z, 0).derivative == Complex(1.0, 0.0));
  CHECK(chain.eval_inverse(z) == z);
  CHECK(chain.trace_point(0) == Complex(1.0, 0.0));
  CHECK(*chain.q_observable(z, 0) == doctest::Approx(geometry::poisson_kernel(BoundaryPoint(0.0), z)).epsilon(1e-15));
}

TEST_CASE("closed-form step matches RK4 under frozen driving") {
  const Complex z(0.5, 0.0);
  for (double dt : {1e-2, 1e-3}) {
    const Complex step = zero_chain(dt, 1).eval_forward(z).value;
    const Complex rk = oracle::rk4_loewner([](double) { return 0.0; }, z, dt, 100);
    CHECK(std::abs(step - rk) < 1e-13);
  }
}

TEST_CASE("single step error against a moving driving is O(dt^2)") {
  const Complex z(0.5, 0.0);
  std::vector<double> err;
  for (double dt : {4e-2, 2e-2, 1e-2}) {
    const Complex step = chain_of(smooth_driving, dt, 1).eval_forward(z).value;
    const Complex rk = oracle::rk4_loewner(smooth_driving, z, dt, 100);
    err.push_back(std::abs(step - rk));
    CHECK(err.back() < dt * dt);
  }
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i - 1] / err[i] > 3.5);
}

TEST_CASE("halving dt quarters the error at fixed horizon") {
  const double T = 0.5;
  const std::vector<Complex> probes{{0.3, 0.2}, {-0.5, 0.1}, {0.1, -0.6}, {0.0, 0.45}};
  std::vector<double> err;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto chain = chain_of(smooth_driving, dt, static_cast<std::size_t>(std::lround(T / dt)));
    double e = 0.0;
    for (const Complex z : probes) {
      const auto r = chain.eval_forward(z);
      REQUIRE_FALSE(r.swallowed);
      e = std::max(e, std::abs(r.value - oracle::rk4_loewner(smooth_driving, z, T, 20000)));
    }
    err.push_back(e);
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    INFO("ratio " << err[i - 1] / err[i]);
    CHECK(std::abs(err[i - 1] / err[i] - 4.0) < 0.5);
  }
}

TEST_CASE("derivative matches a central difference") {
  const auto chain = sample_chain({2.0, 0.5, 1e-4, 8});
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Complex z = std::polar(0.8 * std::sqrt(u(gen)), kTwoPi * u(gen));
    const auto r = chain.eval_derivative(z, chain.steps());
    if (r.swallowed) continue;
    const double e = 1e-6;
    const Complex fd = (chain.eval_forward(z + e).value - chain.eval_forward(z - e).value) / (2 * e);
    CHECK(std::abs(r.derivative - fd) <= 1e-5 * std::max(1.0, std::abs(r.derivative)));
    ++checked;
  }
  CHECK(checked > 90);
}

TEST_CASE("points on a radial slit are swallowed once the tip passes") {
  const double dt = 1e-4;
  const auto chain = zero_chain(dt, 500);
  for (double x : {0.99, 0.95, 0.9}) {
    const auto r = chain.eval_forward({x, 0.0});
    REQUIRE(r.swallowed);
    const Complex tip = chain.trace_point(r.swallow_step());
    CHECK(tip.real() <= x);
    CHECK(std::abs(tip - x) < chain.trace_resolution());
    if (r.swallow_step() >= 2) CHECK(std::abs(chain.trace_point(r.swallow_step() - 2)) > x);
  }
  // Off the slit nothing is swallowed.
  CHECK_FALSE(chain.eval_forward({0.99, 1e-3}).swallowed);
}

TEST_CASE("zero driving traces the radial segment") {
  const auto chain = zero_chain(1e-3, 1000);
  double prev = 1.0;
  for (std::size_t k = 1; k <= 1000; ++k) {
    const Complex b = chain.trace_point(k);
    REQUIRE(std::abs(b.imag()) < 1e-12);
    REQUIRE(b.real() < prev);
    REQUIRE(b.real() > 0.0);
    prev = b.real();
  }
}

TEST_CASE("round trip where the map is well conditioned") {
  // Accuracy of g^{-1}(g(z)) is limited by eps / |g'(z)|; points the trace
  // has nearly enclosed have |g'| far below 1e-6 and are excluded here.
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto chain = sample_chain({2.0, 1.0, 1e-4, seed});
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const Complex z = std::polar(0.9 * std::sqrt(u(gen)), kTwoPi * u(gen));
      const auto r = chain.eval_derivative(z, chain.steps());
      if (r.swallowed || std::abs(r.derivative) < 1e-6) continue;
      REQUIRE(std::abs(chain.eval_inverse(r.value) - z) < 1e-6);
    }
  }
}

TEST_CASE("Q is positive and equals 1 at the origin") {
  const auto chain = sample_chain({2.0, 1.0, 1e-3, 4});
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k <= chain.steps(); k += 100) {
    CHECK(*chain.q_observable({0.0, 0.0}, k) == 1.0);
    const Complex z = std::polar(0.95 * u(gen), kTwoPi * u(gen));
    if (const auto q = chain.q_observable(z, k)) CHECK(*q > 0.0);
  }
}

TEST_CASE("consecutive trace points stay within the trace resolution") {
  const auto chain = sample_chain({2.0, 1.0, 1e-4, 6});
  const auto tr = trace_of(chain);
  for (std::size_t k = 1; k < tr.size(); ++k) REQUIRE(std::abs(tr.points[k] - tr.points[k - 1]) < chain.trace_resolution());
}

TEST_CASE("grid lookups, truncation and serialization") {
  const auto chain = sample_chain({2.0, 0.1, 1e-3, 3});
  CHECK(chain.step_at(0.05) == 50);
  CHECK_THROWS_AS(chain.step_at(0.0505), std::invalid_argument);
  CHECK_THROWS_AS(chain.step_at(0.2), std::out_of_range);
  CHECK_THROWS_AS(chain.eval_forward({0.1, 0.0}, 101), std::out_of_range);
  CHECK_THROWS_AS(chain.eval_forward({1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(chain.eval_inverse({1.1, 0.0}), std::domain_error);

  const auto head = chain.truncated(40);
  CHECK(head.steps() == 40);
  CHECK(head.trace_point(40) == chain.trace_point(40));

  const auto back = LoewnerChain::from_json(nlohmann::json::parse(chain.to_json().dump()));
  CHECK(back.driving_values() == chain.driving_values());
  CHECK(back.trace_point(100) == chain.trace_point(100));

  CHECK_THROWS_AS(LoewnerChain(0.0), std::invalid_argument);
  CHECK_THROWS_AS(LoewnerChain(1e-3).advance(NAN), std::invalid_argument);
  DrivingFunction bad{1e-3, {}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
