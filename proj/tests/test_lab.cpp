#include <doctest.h>

#include "bmloop/geometry.hpp"
#include "bmloop/lab.hpp"
#include "oracles.hpp"

using namespace bmloop;
using namespace bmloop::lab;

namespace {

const TestReport& find(const std::vector<TestReport>& reports, const std::string& name) {
  for (const auto& r : reports)
    if (r.name == name) return r;
  FAIL("no report named " << name);
  return reports.front();
}

// pass must follow from the recorded numbers for the p-value style reports.
void check_p_reports(const std::vector<TestReport>& reports) {
  for (const auto& r : reports) {
    if (r.criterion != "p > 0.01") continue;
    REQUIRE(r.p_value.has_value());
    CHECK(r.pass == (*r.p_value > 0.01));
  }
}

}  // namespace

TEST_CASE("initial drift of Q matches finite differences") {
  for (double kappa : {0.0, 2.0, 4.0, 6.0}) {
    for (Complex z : {Complex(-0.3, 0.0), Complex(0.2, 0.3), Complex(-0.5, -0.4), Complex(0.6, 0.0)}) {
      CHECK(q_drift_at_start(kappa, z) == doctest::Approx(oracle::q_drift_finite_difference(kappa, z)).epsilon(1e-4).scale(1.0));
    }
  }
  CHECK(q_drift_at_start(2.0, {-0.3, 0.1}) == 0.0);
  CHECK(q_drift_at_start(6.0, {-0.3, 0.0}) == doctest::Approx(0.3823).epsilon(1e-3));
}

TEST_CASE("Q martingale test and its control") {
  QMartingaleConfig cfg;
  cfg.samples = 3000;
  const auto good = q_martingale_test(cfg, {1, 1});
  CHECK(good.name == "q_martingale.kappa2");
  CHECK(good.pass);
  CHECK(good.reference == doctest::Approx(geometry::poisson_kernel(BoundaryPoint(0.0), cfg.z)));

  cfg.kappa = 6.0;
  const auto control = q_martingale_test(cfg, {1, 1});
  CHECK(control.name == "q_martingale.control");
  CHECK(control.pass);  // the deviation is detected
  CHECK(control.statistic > control.reference);
  CHECK(control.details.at("initial_drift").get<double>() > 0.0);

  QMartingaleConfig origin;
  origin.z = 0.0;
  origin.samples = 20;
  const auto o = q_martingale_test(origin, {1, 1});
  CHECK(o.statistic == 1.0);
  CHECK(o.pass);
}

TEST_CASE("two-time log bound from the Groetzsch radius") {
  const double m = std::log(0.7 / 0.3) / (2 * oracle::kPi);
  double lo = 1e-9, hi = 1 - 1e-9;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::grotzsch_modulus_quadrature(mid) > m ? lo : hi) = mid;
  }
  const double rm = 0.5 * (lo + hi);
  CHECK(two_time_log_bound(0.3, 0.7) == doctest::Approx(std::log((1 + rm) / (1 - rm))).epsilon(1e-9));
}

TEST_CASE("two-time samples") {
  TwoTimeConfig cfg;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto s = two_time_sample(cfg, 3, i);
    REQUIRE_FALSE(s.swallowed);
    CHECK(std::abs(std::abs(s.b1) - cfg.r1) < 1e-12);
    CHECK(s.m > 0.0);
    CHECK(s.m == doctest::Approx(s.n_joint / s.n_base));
    const double bound = two_time_log_bound(cfg.r1, cfg.r2);
    CHECK(std::abs(std::log(s.n_joint)) <= bound);
    CHECK(std::abs(std::log(s.n_base)) <= bound);
    CHECK(s.t2 <= std::log(1 / cfg.r2) + 1e-12);
  }
  cfg.degenerate = Degenerate::bm_at_start;
  CHECK(two_time_sample(cfg, 3, 0).m == 1.0);
  cfg.degenerate = Degenerate::sle_at_start;
  CHECK(two_time_sample(cfg, 3, 0).m == 1.0);
}

TEST_CASE("two-time weight test on a small sample") {
  TwoTimeConfig cfg;
  cfg.samples = 200;
  const auto reports = two_time_weight_test(cfg, {5, 1});
  REQUIRE(reports.size() == 2);
  CHECK(find(reports, "two_time.mean_weight").pass);
  CHECK(find(reports, "two_time.log_bound").pass);
  CHECK_THROWS_AS(two_time_weight_test({0.7, 0.3}, {5, 1}), std::invalid_argument);
}

TEST_CASE("reference flow agrees with the test oracle") {
  auto xi = [](double t) { return std::cos(2 * t) - 1.0; };
  for (Complex z : {Complex(0.3, 0.2), Complex(-0.6, 0.1)}) {
    CHECK(std::abs(reference_flow(xi, z, 0.5, 4000) - oracle::rk4_loewner(xi, z, 0.5, 4000)) < 1e-12);
  }
}

TEST_CASE("loewner suite passes its well-posed checks") {
  EngineSuiteConfig cfg;
  cfg.drivings = 1;
  cfg.round_trip_points = 50;
  cfg.horizon = 0.2;
  cfg.order_dts = {4e-3, 2e-3, 1e-3};
  const auto reports = loewner_engine_suite(cfg, {7, 1});
  CHECK(find(reports, "loewner.conformal_radius").pass);
  CHECK(find(reports, "loewner.convergence_order").pass);
  const auto& trip = find(reports, "loewner.round_trip");
  CHECK(trip.pass == (trip.statistic <= 1e-6));
}

TEST_CASE("loop-erasure suite on a small sample") {
  ErasureSuiteConfig cfg;
  cfg.walks = 300;
  cfg.continuous_walks = 20;
  const auto reports = loop_erasure_suite(cfg, {1, 1});
  CHECK(find(reports, "loop_erasure.discrete").pass);
  CHECK(find(reports, "loop_erasure.continuous").pass);
}

TEST_CASE("conditioned-BM suite is deterministic across thread counts") {
  CbmSuiteConfig cfg;
  cfg.arrival_samples = 300;
  cfg.ks_samples = 300;
  cfg.mixture_samples = 1000;
  cfg.time_change_paths = 5;
  const auto a = conditioned_bm_suite(cfg, {11, 1});
  const auto b = conditioned_bm_suite(cfg, {11, 3});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_json().dump() == b[i].to_json().dump());
  check_p_reports(a);
  CHECK(find(a, "conditioned_bm.time_change").pass);
  CHECK(find(a, "conditioned_bm.mixture_control").pass);
  CHECK(find(a, "conditioned_bm.harmonic_exit_control").pass);
}

TEST_CASE("harmonic exit: uniform pole passes, fixed pole fails") {
  CbmSuiteConfig cfg;
  const auto mixed = harmonic_exit_test(3000, true, cfg, {2, 1});
  CHECK(mixed.pass);
  CHECK(*mixed.p_value > 0.01);
  const auto fixed = harmonic_exit_test(3000, false, cfg, {2, 1});
  CHECK(fixed.pass);  // the control is expected to reject uniformity
  CHECK(*fixed.p_value <= 0.01);
}

TEST_CASE("reversal and segment distance") {
  TimedPath tr;
  tr.push_back(0.0, {1.0, 0.0});
  tr.push_back(0.25, {0.8, 0.1});
  tr.push_back(0.5, {0.6, 0.0});
  const auto rev = reverse_trace(tr);
  rev.validate();
  CHECK(rev.times == std::vector<double>{2.0, 4.0, INFINITY});
  CHECK(rev.points.front() == tr.points.back());
  CHECK(rev.points.back() == Complex(1.0, 0.0));

  CHECK(segment_distance({0.5, 1.0}, {0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(segment_distance({2.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(segment_distance({0.3, 0.4}, {0.0, 0.0}, {0.0, 0.0}) == doctest::Approx(0.5));
}

TEST_CASE("coupling demo bundle") {
  CouplingConfig cfg;
  cfg.t2 = 0.1;
  cfg.paths = 30;
  cfg.euler_samples = 60;
  cfg.exported_paths = 5;
  const auto res = coupling_demo(cfg, {4, 1});
  CHECK(res.reports.size() == 4);
  CHECK(res.bundle.trace.points.front() == Complex(1.0, 0.0));
  CHECK(res.bundle.trace.times.back() == doctest::Approx(cfg.t2));
  CHECK(res.bundle.reversal.times.front() == doctest::Approx(1.0 / cfg.t2));
  CHECK(std::isinf(res.bundle.reversal.times.back()));
  CHECK(res.bundle.reversal.points.front() == res.bundle.trace.points.back());
  CHECK(res.bundle.paths.size() == 5);
  const Complex tip = res.bundle.trace.points.back();
  for (const auto& p : res.bundle.paths) CHECK(std::abs(p.points.front()) < 1e-15);
  CHECK(find(res.reports, "coupling.tip_arrival").statistic >= 0.9);
  (void)tip;
  check_p_reports(res.reports);
}

TEST_CASE("LERW and SLE comparison plumbing") {
  CompareConfig cfg;
  cfg.mesh = 1.0 / 50;
  cfg.samples = 100;
  cfg.dt = 1e-3;
  const auto res = lerw_sle_compare(cfg, {3, 1});
  CHECK(res.lerw_angles.size() == 100);
  CHECK(res.sle_angles.size() == 100);
  for (double a : res.lerw_angles) CHECK(std::abs(a) <= oracle::kPi);
  CHECK(res.reports.size() == 4);
  check_p_reports(res.reports);
}

TEST_CASE("report serialization round trip") {
  TestReport r;
  r.name = "x.y";
  r.statistic = 0.1;
  r.reference = 0.2;
  r.tolerance = 0.3;
  r.p_value = 0.4;
  r.criterion = "p > 0.01";
  r.pass = true;
  r.samples = 12;
  r.seed = 99;
  r.config = {{"a", 1}};
  r.details = {{"b", "c"}};
  const auto back = TestReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  CHECK(back.to_json() == r.to_json());
  TestReport bare;
  bare.name = "n";
  const auto bare_back = TestReport::from_json(bare.to_json());
  CHECK_FALSE(bare_back.tolerance.has_value());
  CHECK_FALSE(bare_back.p_value.has_value());
}

TEST_CASE("suite registry") {
  CHECK(suite_names().size() == 7);
  CHECK_THROWS_AS(run_suite("nope", {}), std::invalid_argument);
}
