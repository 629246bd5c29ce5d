#include "bmloop/lab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "bmloop/conditioned_bm.hpp"
#include "bmloop/geometry.hpp"
#include "bmloop/loop_erasure.hpp"
#include "bmloop/parallel.hpp"
#include "bmloop/rng.hpp"
#include "bmloop/sle.hpp"
#include "bmloop/stats.hpp"
#include "bmloop/walkers.hpp"

namespace bmloop::lab {

namespace {

// Stream tags: each role draws from its own family of derived seeds, so a
// suite's numbers do not depend on which other suites run.
enum Stream : std::uint64_t {
  kErasureWalk = 101,
  kEngineDriving = 201,
  kEnginePoints,
  kQDriving = 301,
  kTwoTimeBm = 401,
  kTwoTimeSle,
  kCbmSde = 501,
  kCbmRotated,
  kCbmBessel,
  kCbmMixturePole,
  kCbmMixturePath,
  kCbmControlPath,
  kCbmExitPole,
  kCbmExitPath,
  kCbmClock,
  kCouplingTrace = 601,
  kCouplingPath,
  kCouplingExact,
  kCouplingEuler,
  kCompareLerw = 701,
  kCompareSle,
};

constexpr double kKsThreshold = 0.01;

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

TestReport ks_report(std::string name, std::span<const double> a, std::span<const double> b, std::uint64_t seed,
                     nlohmann::json config) {
  const auto ks = stats::ks_two_sample(a, b);
  TestReport r;
  r.name = std::move(name);
  r.statistic = ks.statistic;
  r.reference = 0.0;
  r.p_value = ks.p_value;
  r.criterion = "p > 0.01";
  r.pass = ks.p_value > kKsThreshold;
  r.samples = a.size() + b.size();
  r.seed = seed;
  r.config = std::move(config);
  r.details = {{"n_a", a.size()}, {"n_b", b.size()}};
  return r;
}

TestReport split_half_report(std::string name, std::span<const double> x, std::uint64_t seed, nlohmann::json config) {
  const std::size_t half = x.size() / 2;
  auto r = ks_report(std::move(name), x.subspan(0, half), x.subspan(half), seed, std::move(config));
  r.details["role"] = "null calibration (split halves of one ensemble)";
  return r;
}

/// Two-sample KS between the halves of one ensemble, for report details.
nlohmann::json split_half_details(std::span<const double> x) {
  const std::size_t half = x.size() / 2;
  const auto ks = stats::ks_two_sample(x.subspan(0, half), x.subspan(half));
  return {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
}

/// Crossing point of |z| = r on the first segment that leaves the disk of
/// radius r, or nothing.
std::optional<Complex> exit_crossing(const std::vector<Complex>& pts, double r) {
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (std::abs(pts[k]) >= r) return circle_crossing(pts[k], pts[k - 1], r);
  return std::nullopt;
}

double angle_0_2pi(Complex z) {
  double a = std::arg(z);
  if (a < 0.0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

std::vector<double> negated(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v = -v;
  return out;
}

/// First half against the negated second half.
TestReport symmetry_report(std::string name, std::span<const double> x, std::uint64_t seed, nlohmann::json config) {
  const std::size_t half = x.size() / 2;
  auto r = ks_report(std::move(name), x.subspan(0, half), negated(x.subspan(half)), seed, std::move(config));
  r.details["role"] = "reflection symmetry: first half against the negated second half";
  return r;
}

}  // namespace

nlohmann::json TestReport::to_json() const {
  return {{"name", name},         {"statistic", statistic}, {"reference", reference},
          {"tolerance", optional_json(tolerance)}, {"p_value", optional_json(p_value)},
          {"criterion", criterion}, {"pass", pass},           {"samples", samples},
          {"seed", seed},         {"config", config},       {"details", details}};
}

TestReport TestReport::from_json(const nlohmann::json& j) {
  TestReport r;
  r.name = j.at("name").get<std::string>();
  r.statistic = j.at("statistic").is_null() ? NAN : j.at("statistic").get<double>();
  r.reference = j.at("reference").is_null() ? NAN : j.at("reference").get<double>();
  if (!j.at("tolerance").is_null()) r.tolerance = j.at("tolerance").get<double>();
  if (!j.at("p_value").is_null()) r.p_value = j.at("p_value").get<double>();
  r.criterion = j.at("criterion").get<std::string>();
  r.pass = j.at("pass").get<bool>();
  r.samples = j.at("samples").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  r.details = j.at("details");
  return r;
}

// --- Loop-erasure ---------------------------------------------------------

std::vector<TestReport> loop_erasure_suite(const ErasureSuiteConfig& cfg, const RunOptions& opt) {
  LatticeConfig lat{cfg.mesh, cfg.max_steps};
  lat.validate();

  struct Outcome {
    bool simple = true, endpoints = true, subset = true, idempotent = true, matches_generic = true;
    bool characterization = true;
    bool full_brute = false;
    std::size_t length = 0;
    std::string first_failure;
  };

  auto check = [&](std::size_t i) {
    Outcome o;
    const auto walk = sample_srw_lattice(lat, derive_seed(opt.seed, i, kErasureWalk));
    o.length = walk.size() - 1;
    const auto er = erase_lattice_loops(walk);
    const auto& y = er.simple_path;
    const auto& w = er.index_map;

    std::unordered_set<LatticePoint, LatticePointHash> seen;
    for (const auto& v : y) o.simple = seen.insert(v).second && o.simple;
    o.endpoints = y.front() == walk.front() && y.back() == walk.back();
    o.subset = w.size() == y.size() && w[0] == 0;
    for (std::size_t k = 0; o.subset && k < y.size(); ++k)
      o.subset = w[k] < walk.size() && y[k] == walk[w[k]] && (k == 0 || w[k] > w[k - 1]);

    const auto again = erase_lattice_loops(std::span<const LatticePoint>(y));
    o.idempotent = again.simple_path == y;
    for (std::size_t k = 0; o.idempotent && k < again.index_map.size(); ++k) o.idempotent = again.index_map[k] == k;

    const auto generic = erase_loops(to_plane(walk, cfg.mesh));
    o.matches_generic = generic.index_map == w;

    std::string why;
    if (o.length <= cfg.brute_force_max) {
      o.full_brute = true;
      why = check_characterization<LatticePoint>(walk, er);
    }
    if (why.empty()) {
      const std::span<const LatticePoint> prefix(walk.data(), std::min(walk.size(), cfg.brute_force_max + 1));
      why = check_characterization<LatticePoint>(prefix, erase_lattice_loops(prefix));
    }
    o.characterization = why.empty();
    if (!o.simple) o.first_failure = "not simple";
    else if (!o.endpoints) o.first_failure = "endpoints not preserved";
    else if (!o.subset) o.first_failure = "not a vertex subset";
    else if (!o.idempotent) o.first_failure = "not idempotent";
    else if (!o.matches_generic) o.first_failure = "lattice and generic erasure differ";
    else if (!o.characterization) o.first_failure = why;
    return o;
  };
  const auto outcomes = parallel_map(cfg.walks, opt.threads, check);

  std::size_t failures = 0, simple = 0, endpoints = 0, subset = 0, idem = 0, generic = 0, charact = 0, brute = 0;
  double mean_length = 0.0;
  nlohmann::json first = nullptr;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    simple += !o.simple;
    endpoints += !o.endpoints;
    subset += !o.subset;
    idem += !o.idempotent;
    generic += !o.matches_generic;
    charact += !o.characterization;
    brute += o.full_brute;
    mean_length += static_cast<double>(o.length) / static_cast<double>(outcomes.size());
    if (!o.first_failure.empty()) {
      ++failures;
      if (first.is_null()) first = {{"walk", i}, {"reason", o.first_failure}};
    }
  }

  const nlohmann::json config = {{"walks", cfg.walks}, {"mesh", cfg.mesh}, {"max_steps", cfg.max_steps},
                                 {"brute_force_max", cfg.brute_force_max}};
  TestReport discrete;
  discrete.name = "loop_erasure.discrete";
  discrete.statistic = static_cast<double>(failures);
  discrete.reference = 0.0;
  discrete.tolerance = 0.0;
  discrete.criterion = "failing walks == 0";
  discrete.pass = failures == 0;
  discrete.samples = cfg.walks;
  discrete.seed = opt.seed;
  discrete.config = config;
  discrete.details = {{"not_simple", simple},
                      {"endpoints", endpoints},
                      {"vertex_subset", subset},
                      {"idempotence", idem},
                      {"lattice_vs_generic", generic},
                      {"characterization", charact},
                      {"walks_checked_whole_by_brute_force", brute},
                      {"prefixes_checked_by_brute_force", cfg.walks},
                      {"mean_walk_length", mean_length},
                      {"first_failure", first}};

  // Continuous check on embedded pairs, plus a non-simple curve posing as
  // its own loop-erasure, which must be rejected.
  const double eps = cfg.mesh / 4.0;
  const std::size_t nc = std::min(cfg.continuous_walks, cfg.walks);
  const auto verdicts = parallel_map(nc, opt.threads, [&](std::size_t i) {
    const auto walk = sample_srw(lat, derive_seed(opt.seed, i, kErasureWalk));
    const auto er = erase_loops(walk);
    const auto emb = embed_erasure(walk, er, 4);
    return verify_loop_erasure(emb.x, emb.y, emb.w, eps).ok;
  });
  const auto accepted = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), true));

  TimedPath eight;
  const Complex eight_pts[] = {{0, 0}, {1, 1}, {1, -1}, {0, 0}, {-1, 1}, {-1, -1}, {0, 0}, {0.5, 0}};
  for (std::size_t k = 0; k < std::size(eight_pts); ++k) eight.push_back(static_cast<double>(k), eight_pts[k]);
  const auto dense = embed_erasure(DiscretePath(eight.points), ErasureResult{eight.points, {0, 1, 2, 3, 4, 5, 6, 7}}, 8);
  const auto control = verify_loop_erasure(dense.x, dense.x, dense.x.times, 0.05);

  TestReport cont;
  cont.name = "loop_erasure.continuous";
  cont.statistic = static_cast<double>(nc - accepted);
  cont.reference = 0.0;
  cont.tolerance = 0.0;
  cont.criterion = "rejected embedded erasures == 0 and the non-simple control is rejected";
  cont.pass = accepted == nc && !control.ok;
  cont.samples = nc;
  cont.seed = opt.seed;
  cont.config = {{"walks", nc}, {"mesh", cfg.mesh}, {"eps", eps}, {"samples_per_edge", 4}};
  cont.details = {{"accepted", accepted},
                  {"control_rejected", !control.ok},
                  {"control_reason", control.reason}};
  return {discrete, cont};
}

// --- Loewner engine -------------------------------------------------------

Complex reference_flow(const std::function<double(double)>& xi, Complex z, double T, std::size_t steps) {
  const double h = T / static_cast<double>(steps);
  auto f = [&](double t, Complex g) {
    const Complex u = std::polar(1.0, xi(t));
    return g * (u + g) / (u - g);
  };
  double t = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const Complex k1 = f(t, z);
    const Complex k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
    const Complex k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
    const Complex k4 = f(t + h, z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = h * static_cast<double>(s + 1);
  }
  return z;
}

std::vector<TestReport> loewner_engine_suite(const EngineSuiteConfig& cfg, const RunOptions& opt) {
  struct DrivingOutcome {
    double radius_error = 0.0;
    double round_trip_error = 0.0;
    std::size_t survivors = 0;
    std::size_t over = 0;         // survivors missing the forward tolerance
    double min_derivative = INFINITY;  // smallest |g'(z)| among those
  };
  const auto outcomes = parallel_map(cfg.drivings, opt.threads, [&](std::size_t d) {
    SleConfig sc;
    sc.kappa = 2.0;
    sc.dt = cfg.dt;
    sc.T = cfg.horizon;
    sc.seed = derive_seed(opt.seed, d, kEngineDriving);
    const auto chain = sample_chain(sc);
    DrivingOutcome o;
    for (std::size_t j = 0; j <= 10; ++j) {
      const std::size_t k = chain.steps() * j / 10;
      const double expect = std::exp(cfg.dt * static_cast<double>(k));
      const auto r = chain.eval_derivative(Complex{}, k);
      o.radius_error = std::max(o.radius_error, std::abs(r.derivative - expect) / expect);
    }
    Rng rng(derive_seed(opt.seed, d, kEnginePoints));
    for (std::size_t p = 0; p < cfg.round_trip_points; ++p) {
      const Complex z = std::polar(cfg.round_trip_radius * std::sqrt(rng.uniform()), kTwoPi * rng.uniform());
      const auto fwd = chain.eval_derivative(z, chain.steps());
      if (fwd.swallowed) continue;
      ++o.survivors;
      const Complex back = chain.eval_inverse(fwd.value);
      const double err = std::abs(back - z);
      o.round_trip_error = std::max(o.round_trip_error, err);
      if (err > 1e-6) {
        ++o.over;
        o.min_derivative = std::min(o.min_derivative, std::abs(fwd.derivative));
      }
    }
    return o;
  });

  double radius_error = 0.0, trip_error = 0.0, min_derivative = INFINITY;
  std::size_t survivors = 0, over = 0;
  for (const auto& o : outcomes) {
    radius_error = std::max(radius_error, o.radius_error);
    trip_error = std::max(trip_error, o.round_trip_error);
    min_derivative = std::min(min_derivative, o.min_derivative);
    survivors += o.survivors;
    over += o.over;
  }
  const nlohmann::json config = {{"dt", cfg.dt}, {"horizon", cfg.horizon}, {"drivings", cfg.drivings}, {"kappa", 2.0}};

  TestReport radius;
  radius.name = "loewner.conformal_radius";
  radius.statistic = radius_error;
  radius.reference = 0.0;
  radius.tolerance = 1e-9;
  radius.criterion = "max |g_t'(0) - e^t| / e^t <= 1e-9";
  radius.pass = radius_error <= 1e-9;
  radius.samples = cfg.drivings * 11;
  radius.seed = opt.seed;
  radius.config = config;

  TestReport trip;
  trip.name = "loewner.round_trip";
  trip.statistic = trip_error;
  trip.reference = 0.0;
  trip.tolerance = 1e-6;
  trip.criterion = "max |g^{-1}(g(z)) - z| <= 1e-6 over surviving |z| <= 0.9";
  trip.pass = trip_error <= 1e-6 && survivors > 0;
  trip.samples = survivors;
  trip.seed = opt.seed;
  trip.config = config;
  trip.config["radius"] = cfg.round_trip_radius;
  // Points the trace nearly seals off against the circle have |g'(z)| of
  // order 1e-13; one rounding of g(z) then moves g^{-1} by eps / |g'|.
  trip.details = {{"points", cfg.drivings * cfg.round_trip_points},
                  {"survivors", survivors},
                  {"over_tolerance", over},
                  {"min_abs_derivative_over_tolerance", over ? nlohmann::json(min_derivative) : nlohmann::json()}};


  // Convergence order against RK4 with a smooth driving function.
  auto xi = [](double t) { return 0.8 * std::sin(3.0 * t) + 0.5 * t; };
  const Complex probes[] = {{0.5, 0.0}, {0.3, 0.4}, {0.0, -0.6}, {-0.7, 0.1}};
  const double finest = *std::min_element(cfg.order_dts.begin(), cfg.order_dts.end());
  const auto ref_steps = static_cast<std::size_t>(std::llround(cfg.order_horizon / (finest / 100.0)));
  std::vector<Complex> refs;
  for (const Complex z : probes) refs.push_back(reference_flow(xi, z, cfg.order_horizon, ref_steps));
  std::vector<double> errors;
  for (const double dt : cfg.order_dts) {
    DrivingFunction d;
    d.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(cfg.order_horizon / dt));
    d.values.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) d.values[k] = xi(dt * static_cast<double>(k));
    const auto chain = LoewnerChain::from_driving(d);
    double err = 0.0;
    for (std::size_t p = 0; p < std::size(probes); ++p)
      err = std::max(err, std::abs(chain.eval_forward(probes[p]).value - refs[p]));
    errors.push_back(err);
  }
  std::vector<double> ratios;
  bool ratios_ok = errors.size() >= 2;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    ratios.push_back(errors[i - 1] / errors[i]);
    ratios_ok = ratios_ok && std::abs(ratios.back() - 4.0) <= 0.5;
  }
  TestReport order;
  order.name = "loewner.convergence_order";
  order.statistic = ratios.empty() ? 0.0 : *std::min_element(ratios.begin(), ratios.end());
  order.reference = 4.0;
  order.tolerance = 0.5;
  order.criterion = "every error ratio per dt halving within 4 +- 0.5";
  order.pass = ratios_ok;
  order.samples = errors.size();
  order.seed = opt.seed;
  order.config = {{"dts", cfg.order_dts},
                  {"horizon", cfg.order_horizon},
                  {"reference_steps", ref_steps},
                  {"driving", "0.8 sin(3t) + 0.5 t"}};
  order.details = {{"errors", errors}, {"ratios", ratios}};
  return {radius, trip, order};
}

// --- Local martingale Q_t(z) ----------------------------------------------

double q_drift_at_start(double kappa, Complex z) {
  const Complex d = 1.0 - z;
  return ((2.0 - kappa) * z * (1.0 + z) / (d * d * d)).real();
}

TestReport q_martingale_test(const QMartingaleConfig& cfg, const RunOptions& opt) {
  if (!(std::abs(cfg.z) < 1.0)) throw std::invalid_argument("q_martingale_test: requires |z| < 1");
  SleConfig base;
  base.kappa = cfg.kappa;
  base.T = cfg.t;
  base.dt = cfg.dt;
  base.validate();

  struct Sample {
    double q;
    bool swallowed;
  };
  const auto samples = parallel_map(cfg.samples, opt.threads, [&](std::size_t i) {
    SleConfig sc = base;
    sc.seed = derive_seed(opt.seed, i, kQDriving);
    const auto chain = sample_chain(sc);
    const auto fwd = chain.eval_forward(cfg.z);
    return Sample{geometry::detail::poisson_kernel(chain.tip_unit(fwd.steps_survived), fwd.value), fwd.swallowed};
  });
  std::vector<double> q(samples.size());
  std::size_t swallowed = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    q[i] = samples[i].q;
    swallowed += samples[i].swallowed;
  }
  const auto ms = stats::mean_se(q);
  const double q0 = geometry::poisson_kernel(BoundaryPoint(0.0), cfg.z);
  const double drift = q_drift_at_start(cfg.kappa, cfg.z);
  const double dev = ms.mean - q0;

  TestReport r;
  const bool martingale = cfg.kappa == 2.0;
  r.name = martingale ? "q_martingale.kappa2" : "q_martingale.control";
  r.statistic = ms.mean;
  r.reference = q0;
  r.tolerance = 3.0 * ms.se;
  if (martingale) {
    r.criterion = "|mean - Q_0(z)| <= 3 se";
    r.pass = std::abs(dev) <= 3.0 * ms.se;
  } else {
    r.criterion = "negative control: (mean - Q_0(z)) * sign(drift) > 3 se";
    r.pass = drift != 0.0 && dev * (drift > 0.0 ? 1.0 : -1.0) > 3.0 * ms.se;
  }
  r.samples = cfg.samples;
  r.seed = opt.seed;
  r.config = {{"z", complex_json(cfg.z)}, {"t", cfg.t}, {"kappa", cfg.kappa}, {"dt", cfg.dt}, {"samples", cfg.samples}};
  r.details = {{"mean", ms.mean},     {"se", ms.se},           {"deviation_in_se", ms.se > 0 ? dev / ms.se : 0.0},
               {"swallowed", swallowed}, {"initial_drift", drift}, {"role", martingale ? "martingale" : "negative control"}};
  return r;
}

// --- Two-time weight --------------------------------------------------------

double two_time_log_bound(double r1, double r2) {
  const double rm = geometry::grotzsch_inverse(geometry::annulus_modulus(r1, r2));
  return geometry::poisson_log_bound(rm);
}

TwoTimeSample two_time_sample(const TwoTimeConfig& cfg, std::uint64_t seed, std::size_t index) {
  TwoTimeSample s;
  if (cfg.degenerate != Degenerate::bm_at_start) {
    CbmConfig c;
    c.h = cfg.h;
    c.boundary_factor = cfg.boundary_factor;
    c.stop_radius = cfg.r1;
    c.seed = derive_seed(seed, index, kTwoTimeBm);
    const auto path = sample_cbm_sde(c);
    const std::size_t n = path.size();
    s.b1 = circle_crossing(path.points[n - 1], path.points[n - 2], cfg.r1);
  }
  std::optional<LoewnerChain> chain;
  std::size_t k2 = 0;
  if (cfg.degenerate != Degenerate::sle_at_start) {
    SleConfig sc;
    sc.kappa = 2.0;
    sc.dt = cfg.dt;
    sc.T = cfg.dt * std::ceil((std::log(1.0 / cfg.r2) + 0.1) / cfg.dt);
    sc.seed = derive_seed(seed, index, kTwoTimeSle);
    chain = sample_chain(sc);
    // dist(0, hull_t) <= e^{-t}, so the trace reaches r2 before ln(1 / r2).
    const auto hit = first_hit_radius(*chain, cfg.r2);
    if (!hit) throw std::logic_error("two_time_sample: trace never reached r2 within ln(1/r2) + 0.1");
    k2 = hit->step;
    s.t2 = cfg.dt * static_cast<double>(k2);
  }
  s.n_base = geometry::poisson_kernel(BoundaryPoint(0.0), s.b1);
  if (cfg.degenerate == Degenerate::bm_at_start) {
    // M(0, t2) = 1: B1(0) = 0 and Q_t(0) = 1.
    s.n_joint = 1.0;
    s.m = 1.0;
    return s;
  }
  if (k2 == 0) {
    // M(t1, 0) = 1.
    s.n_joint = s.n_base;
    s.m = 1.0;
    return s;
  }
  const auto q = chain->q_observable(s.b1, k2);
  if (!q) {
    s.swallowed = true;
    return s;
  }
  s.n_joint = *q;
  s.m = s.n_joint / s.n_base;
  return s;
}

std::vector<TestReport> two_time_weight_test(const TwoTimeConfig& cfg, const RunOptions& opt) {
  if (!(cfg.r1 > 0.0 && cfg.r1 < cfg.r2 && cfg.r2 < 1.0))
    throw std::invalid_argument("two_time_weight_test: requires 0 < r1 < r2 < 1");
  const auto samples =
      parallel_map(cfg.samples, opt.threads, [&](std::size_t i) { return two_time_sample(cfg, opt.seed, i); });

  const double bound = two_time_log_bound(cfg.r1, cfg.r2);
  std::vector<double> m;
  m.reserve(samples.size());
  double max_ln_n = 0.0, max_ln_m = 0.0, mean_t2 = 0.0;
  std::size_t violations = 0, swallowed = 0;
  for (const auto& s : samples) {
    if (s.swallowed) {
      ++swallowed;
      continue;
    }
    m.push_back(s.m);
    const double ln_n = std::max(std::abs(std::log(s.n_joint)), std::abs(std::log(s.n_base)));
    max_ln_n = std::max(max_ln_n, ln_n);
    max_ln_m = std::max(max_ln_m, std::abs(std::log(s.m)));
    violations += ln_n > bound;
    mean_t2 += s.t2 / static_cast<double>(samples.size());
  }
  const auto ms = stats::mean_se(m);
  const char* mode = cfg.degenerate == Degenerate::none           ? "none"
                     : cfg.degenerate == Degenerate::bm_at_start ? "t1 = 0"
                                                                  : "t2 = 0";
  const nlohmann::json config = {{"r1", cfg.r1}, {"r2", cfg.r2}, {"samples", cfg.samples}, {"dt", cfg.dt},
                                 {"h", cfg.h},   {"boundary_factor", cfg.boundary_factor}, {"degenerate", mode}};

  TestReport mean;
  mean.name = "two_time.mean_weight";
  mean.statistic = ms.mean;
  mean.reference = 1.0;
  mean.tolerance = 3.0 * ms.se;
  mean.criterion = "|mean M - 1| <= 3 se";
  mean.pass = swallowed == 0 && std::abs(ms.mean - 1.0) <= 3.0 * ms.se;
  mean.samples = m.size();
  mean.seed = opt.seed;
  mean.config = config;
  mean.details = {{"se", ms.se}, {"mean_t2", mean_t2}, {"swallowed", swallowed}};

  TestReport hard;
  hard.name = "two_time.log_bound";
  hard.statistic = max_ln_n;
  hard.reference = bound;
  hard.criterion = "every sample: |ln N(T1,T2)| and |ln N(T1,0)| <= ln((1 + r_m) / (1 - r_m))";
  hard.pass = violations == 0 && swallowed == 0;
  hard.samples = samples.size();
  hard.seed = opt.seed;
  hard.config = config;
  hard.details = {{"r_m", geometry::grotzsch_inverse(geometry::annulus_modulus(cfg.r1, cfg.r2))},
                  {"violations", violations},
                  {"swallowed", swallowed},
                  {"max_abs_ln_m", max_ln_m},
                  {"bound_on_ln_m", 2.0 * bound}};
  return {mean, hard};
}

// --- Conditioned Brownian motion -------------------------------------------

namespace {

struct PathSummary {
  double probe_angle = 0.0;  // where the path first leaves |z| < probe radius
  double final_angle = 0.0;
  double final_distance = 0.0;  // angular distance from the pole
  double clock_error = 0.0;
};

PathSummary summarize(const TimedPath& p, double probe_radius, Complex pole) {
  PathSummary s;
  s.probe_angle = std::arg(exit_crossing(p.points, probe_radius).value_or(p.back()));
  s.final_angle = std::arg(p.back());
  s.final_distance = std::abs(std::arg(p.back() * std::conj(pole)));
  return s;
}

}  // namespace

TestReport harmonic_exit_test(std::size_t samples, bool mix, const CbmSuiteConfig& cfg, const RunOptions& opt) {
  const auto angles = parallel_map(samples, opt.threads, [&](std::size_t i) {
    CbmConfig c;
    c.h = cfg.h;
    c.boundary_factor = cfg.boundary_factor;
    c.seed = derive_seed(opt.seed, i, mix ? kCbmExitPath : kCbmControlPath);
    if (mix) c.rho = BoundaryPoint(kTwoPi * Rng(derive_seed(opt.seed, i, kCbmExitPole)).uniform());
    return angle_0_2pi(sample_cbm_sde(c).back());
  });
  const auto chi = stats::chi_square_uniform(angles, 0.0, kTwoPi, cfg.bins);
  TestReport r;
  r.name = mix ? "conditioned_bm.harmonic_exit" : "conditioned_bm.harmonic_exit_control";
  r.statistic = chi.statistic;
  r.reference = static_cast<double>(cfg.bins - 1);
  r.p_value = chi.p_value;
  r.criterion = mix ? "chi-square uniformity p > 0.01" : "negative control (fixed pole 1): p <= 0.01";
  r.pass = mix ? chi.p_value > kKsThreshold : chi.p_value <= kKsThreshold;
  r.samples = samples;
  r.seed = opt.seed;
  r.config = {{"samples", samples}, {"bins", cfg.bins}, {"h", cfg.h}, {"boundary_factor", cfg.boundary_factor},
              {"pole", mix ? "uniform" : "1"}, {"functional", "exit angle at the stop radius"}};
  r.details["null_split_half"] = split_half_details(angles);
  return r;
}

std::vector<TestReport> conditioned_bm_suite(const CbmSuiteConfig& cfg, const RunOptions& opt) {
  const Complex one{1.0, 0.0};
  auto base = [&](std::uint64_t seed) {
    CbmConfig c;
    c.h = cfg.h;
    c.boundary_factor = cfg.boundary_factor;
    c.seed = seed;
    return c;
  };
  const nlohmann::json common = {{"h", cfg.h}, {"boundary_factor", cfg.boundary_factor},
                                 {"stop_radius", CbmConfig{}.stop_radius}, {"probe_radius", cfg.probe_radius}};
  std::vector<TestReport> out;

  // Euler paths with pole 1: arrival, and the SDE side of the comparisons.
  const std::size_t n_sde = std::max(cfg.arrival_samples, 2 * cfg.ks_samples);
  const auto sde = parallel_map(n_sde, opt.threads, [&](std::size_t i) {
    return summarize(sample_cbm_sde(base(derive_seed(opt.seed, i, kCbmSde))), cfg.probe_radius, one);
  });
  {
    std::size_t close = 0;
    for (std::size_t i = 0; i < cfg.arrival_samples; ++i) close += sde[i].final_distance <= cfg.arrival_angle;
    const double rate = static_cast<double>(close) / static_cast<double>(cfg.arrival_samples);
    TestReport r;
    r.name = "conditioned_bm.arrival";
    r.statistic = rate;
    r.reference = cfg.arrival_rate;
    r.criterion = "fraction of exits within angular distance 0.1 of the pole >= 0.99";
    r.pass = rate >= cfg.arrival_rate;
    r.samples = cfg.arrival_samples;
    r.seed = opt.seed;
    r.config = common;
    r.config["max_angle"] = cfg.arrival_angle;
    out.push_back(r);
  }

  std::vector<double> sde_probe_a, sde_final_a, sde_probe_b;
  for (std::size_t i = 0; i < cfg.ks_samples; ++i) {
    sde_probe_a.push_back(sde[i].probe_angle);
    sde_final_a.push_back(sde[i].final_angle);
    sde_probe_b.push_back(sde[cfg.ks_samples + i].probe_angle);
  }

  // Rotation: pole e^{i theta}, rotated back, against pole 1.
  {
    const BoundaryPoint pole(cfg.rotation);
    const Complex back = std::conj(pole.value());
    const auto rotated = parallel_map(cfg.ks_samples, opt.threads, [&](std::size_t i) {
      auto c = base(derive_seed(opt.seed, i, kCbmRotated));
      c.rho = pole;
      c.stop_radius = cfg.probe_radius;
      const auto p = sample_cbm_sde(c);
      return std::arg(*exit_crossing(p.points, cfg.probe_radius) * back);
    });
    auto cfg_json = common;
    cfg_json["rotation"] = cfg.rotation;
    auto r = ks_report("conditioned_bm.rotation", rotated, sde_probe_b, opt.seed, cfg_json);
    r.details["functional"] = "angle where the path first reaches |z| = probe_radius";
    r.details["null_companion"] = "conditioned_bm.sde_vs_exact.null";
    out.push_back(r);
  }

  // Euler route against the exact half-plane route.
  const auto exact = parallel_map(cfg.ks_samples, opt.threads, [&](std::size_t i) {
    return summarize(sample_cbm_halfplane(base(derive_seed(opt.seed, i, kCbmBessel))), cfg.probe_radius, one);
  });
  std::vector<double> ex_probe, ex_final;
  for (const auto& e : exact) {
    ex_probe.push_back(e.probe_angle);
    ex_final.push_back(e.final_angle);
  }
  {
    auto r = ks_report("conditioned_bm.sde_vs_exact.probe_angle", sde_probe_a, ex_probe, opt.seed, common);
    r.details["functional"] = "angle where the path first reaches |z| = probe_radius";
    r.details["null_companion"] = "conditioned_bm.sde_vs_exact.null";
    out.push_back(r);
    auto f = ks_report("conditioned_bm.sde_vs_exact.final_angle", sde_final_a, ex_final, opt.seed, common);
    f.details["functional"] = "angle of the first sample with |z| >= stop_radius";
    f.details["null_split_half"] = split_half_details(sde_final_a);
    out.push_back(f);
    std::vector<double> sde_probe_all(sde_probe_a);
    sde_probe_all.insert(sde_probe_all.end(), sde_probe_b.begin(), sde_probe_b.end());
    out.push_back(split_half_report("conditioned_bm.sde_vs_exact.null", sde_probe_all, opt.seed, common));
  }
  {
    // u recovered from the disk path by |W'|^2 against the simulated u.
    const auto errors = parallel_map(cfg.time_change_paths, opt.threads, [&](std::size_t i) {
      auto c = base(derive_seed(opt.seed, i, kCbmClock));
      c.boundary_factor = cfg.time_change_boundary_factor;
      const auto hp = simulate_halfplane(c);
      const auto u = recover_u_clock(halfplane_to_disk(hp, one), one);
      double e = 0.0;
      for (std::size_t k = 1; k < u.size(); ++k) e = std::max(e, std::abs(u[k] / hp.u[k] - 1.0));
      return e;
    });
    const double clock_error = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
    TestReport r;
    r.name = "conditioned_bm.time_change";
    r.statistic = clock_error;
    r.reference = 0.0;
    r.tolerance = cfg.time_change_tolerance;
    r.criterion = "max over samples |u(v(t)) / t - 1| <= 0.01";
    r.pass = clock_error <= cfg.time_change_tolerance;
    r.samples = cfg.time_change_paths;
    r.seed = opt.seed;
    r.config = common;
    r.config["boundary_factor"] = cfg.time_change_boundary_factor;
    out.push_back(r);
  }

  // Mixture over a uniform pole reproduces the unconditioned probe angle.
  auto probe_mixture = [&](bool mix) {
    const auto angles = parallel_map(cfg.mixture_samples, opt.threads, [&](std::size_t i) {
      auto c = base(derive_seed(opt.seed, i, mix ? kCbmMixturePath : kCbmControlPath));
      if (mix) c.rho = BoundaryPoint(kTwoPi * Rng(derive_seed(opt.seed, i, kCbmMixturePole)).uniform());
      c.stop_radius = cfg.probe_radius;
      return angle_0_2pi(*exit_crossing(sample_cbm_sde(c).points, cfg.probe_radius));
    });
    const auto chi = stats::chi_square_uniform(angles, 0.0, kTwoPi, cfg.bins);
    TestReport r;
    r.name = mix ? "conditioned_bm.mixture" : "conditioned_bm.mixture_control";
    r.statistic = chi.statistic;
    r.reference = static_cast<double>(cfg.bins - 1);
    r.p_value = chi.p_value;
    r.criterion = mix ? "chi-square uniformity p > 0.01" : "negative control (fixed pole 1): p <= 0.01";
    r.pass = mix ? chi.p_value > kKsThreshold : chi.p_value <= kKsThreshold;
    r.samples = cfg.mixture_samples;
    r.seed = opt.seed;
    r.config = common;
    r.config["bins"] = cfg.bins;
    r.config["pole"] = mix ? "uniform" : "1";
    r.details["functional"] = "angle where the path first reaches |z| = probe_radius";
    r.details["null_split_half"] = split_half_details(angles);
    return r;
  };
  out.push_back(probe_mixture(true));
  out.push_back(probe_mixture(false));
  out.push_back(harmonic_exit_test(cfg.mixture_samples, true, cfg, opt));
  out.push_back(harmonic_exit_test(cfg.mixture_samples, false, cfg, opt));
  return out;
}

// --- Coupling demo ----------------------------------------------------------

TimedPath reverse_trace(const TimedPath& trace) {
  TimedPath out;
  out.reserve(trace.size());
  for (std::size_t k = trace.size(); k-- > 0;) {
    const double t = trace.times[k];
    out.push_back(t > 0.0 ? 1.0 / t : INFINITY, trace.points[k]);
  }
  return out;
}

double segment_distance(Complex p, Complex a, Complex b) {
  const Complex d = b - a;
  const double len = std::norm(d);
  const double s = len > 0.0 ? std::clamp(((p - a) * std::conj(d)).real() / len, 0.0, 1.0) : 0.0;
  return std::abs(p - a - s * d);
}

namespace {

/// Uniform grid over the segments of a polyline for distance queries below a
/// fixed radius.
class SegmentGrid {
 public:
  SegmentGrid(std::span<const Complex> pts, double cell) : pts_(pts.begin(), pts.end()), cell_(cell) {
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const auto [x0, x1] = std::minmax(key(pts_[i].real()), key(pts_[i + 1].real()));
      const auto [y0, y1] = std::minmax(key(pts_[i].imag()), key(pts_[i + 1].imag()));
      for (auto x = x0; x <= x1; ++x)
        for (auto y = y0; y <= y1; ++y) cells_[pack(x, y)].push_back(i);
    }
  }

  /// True if some segment is closer than the cell size to p.
  bool near(Complex p) const {
    const auto kx = key(p.real()), ky = key(p.imag());
    for (auto x = kx - 1; x <= kx + 1; ++x)
      for (auto y = ky - 1; y <= ky + 1; ++y) {
        const auto it = cells_.find(pack(x, y));
        if (it == cells_.end()) continue;
        for (const std::size_t i : it->second)
          if (segment_distance(p, pts_[i], pts_[i + 1]) < cell_) return true;
      }
    return false;
  }

 private:
  std::int64_t key(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t pack(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(y));
  }

  std::vector<Complex> pts_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

CouplingResult coupling_demo(const CouplingConfig& cfg, const RunOptions& opt) {
  if (!(cfg.t2 >= 0.0)) throw std::invalid_argument("coupling_demo: t2 must be >= 0");
  SleConfig sc;
  sc.kappa = 2.0;
  sc.T = cfg.t2;
  sc.dt = cfg.dt;
  sc.seed = derive_seed(opt.seed, 0, kCouplingTrace);
  sc.validate_trace();
  const auto chain = sample_chain(sc);
  const std::size_t k2 = chain.steps();
  CouplingResult res;
  res.bundle.trace = trace_of(chain, opt.threads);
  res.bundle.reversal = reverse_trace(res.bundle.trace);
  res.bundle.chain = chain.to_json();
  const Complex tip = res.bundle.trace.back();

  const auto lag = static_cast<std::size_t>(std::llround(cfg.avoid_lag / cfg.dt));
  const std::size_t k_avoid = k2 > lag ? k2 - lag : 0;
  const SegmentGrid grid(std::span<const Complex>(res.bundle.trace.points.data(), k_avoid + 1), cfg.avoid_distance);

  auto path_cfg = [&](std::uint64_t seed) {
    CbmConfig c;
    c.h = cfg.h;
    c.boundary_factor = cfg.boundary_factor;
    c.arrival_radius = cfg.arrival_radius;
    c.seed = seed;
    return c;
  };

  struct PathOutcome {
    bool arrived = false;
    bool avoided = true;
    double tip_distance = 0.0;
    std::optional<TimedPath> kept;
  };
  const double arrival = cfg.arrival_factor * cfg.arrival_radius;
  const auto outcomes = parallel_map(cfg.paths, opt.threads, [&](std::size_t i) {
    auto path = sample_cbm_slit(chain, k2, path_cfg(derive_seed(opt.seed, i, kCouplingPath)));
    PathOutcome o;
    o.tip_distance = std::abs(path.back() - tip);
    o.arrived = o.tip_distance <= arrival;
    const std::size_t cut = path.size() - static_cast<std::size_t>(cfg.tail_fraction * static_cast<double>(path.size()));
    if (k_avoid > 0)
      for (std::size_t j = 0; j < cut && o.avoided; ++j) o.avoided = !grid.near(path.points[j]);
    if (i < cfg.exported_paths) o.kept = std::move(path);
    return o;
  });
  std::size_t arrived = 0, avoided = 0;
  std::vector<double> tip_dist;
  for (const auto& o : outcomes) {
    arrived += o.arrived;
    avoided += o.avoided;
    tip_dist.push_back(o.tip_distance);
    if (o.kept) res.bundle.paths.push_back(*o.kept);
  }
  const nlohmann::json config = {{"t2", cfg.t2},
                                 {"paths", cfg.paths},
                                 {"dt", cfg.dt},
                                 {"h", cfg.h},
                                 {"boundary_factor", cfg.boundary_factor},
                                 {"arrival_radius", arrival},
                                 {"avoid_distance", cfg.avoid_distance},
                                 {"avoid_lag", cfg.avoid_lag},
                                 {"tail_fraction", cfg.tail_fraction}};
  const double n = static_cast<double>(std::max<std::size_t>(cfg.paths, 1));

  TestReport ra;
  ra.name = "coupling.tip_arrival";
  ra.statistic = static_cast<double>(arrived) / n;
  ra.reference = cfg.pass_rate;
  ra.criterion = "fraction of paths ending within 10 eps_hit of beta(t2) >= 0.95";
  ra.pass = ra.statistic >= cfg.pass_rate;
  ra.samples = cfg.paths;
  ra.seed = opt.seed;
  ra.config = config;
  ra.details = {{"tip", complex_json(tip)}, {"median_tip_distance", [&] {
                  if (tip_dist.empty()) return 0.0;
                  std::nth_element(tip_dist.begin(), tip_dist.begin() + tip_dist.size() / 2, tip_dist.end());
                  return tip_dist[tip_dist.size() / 2];
                }()}};
  res.reports.push_back(ra);

  TestReport rv;
  rv.name = "coupling.avoidance";
  rv.statistic = static_cast<double>(avoided) / n;
  rv.reference = cfg.pass_rate;
  rv.criterion = "fraction of paths staying avoid_distance away from beta[0, t2 - lag] before their last 1% >= 0.95";
  rv.pass = rv.statistic >= cfg.pass_rate;
  rv.samples = cfg.paths;
  rv.seed = opt.seed;
  rv.config = config;
  rv.details = {{"trace_steps_checked", k_avoid}};
  res.reports.push_back(rv);

  // The slit-domain SDE integrated directly, against the exact route, on the
  // first exit from |z| = euler_radius.
  const auto exact = parallel_map(cfg.euler_samples, opt.threads, [&](std::size_t i) {
    const auto p = slit_first_exit(chain, k2, path_cfg(derive_seed(opt.seed, i, kCouplingExact)), cfg.euler_radius);
    if (!p) throw std::runtime_error("coupling_demo: exact path stopped inside the probe circle");
    return std::arg(*p);
  });
  const auto euler = parallel_map(cfg.euler_samples, opt.threads, [&](std::size_t i) {
    auto c = path_cfg(derive_seed(opt.seed, i, kCouplingEuler));
    c.h = cfg.euler_h;
    return std::arg(slit_euler_first_exit(chain, k2, c, cfg.euler_radius));
  });
  auto euler_cfg = config;
  euler_cfg["euler_radius"] = cfg.euler_radius;
  euler_cfg["euler_h"] = cfg.euler_h;
  euler_cfg["euler_samples"] = cfg.euler_samples;
  auto ev = ks_report("coupling.euler_vs_exact", euler, exact, opt.seed, euler_cfg);
  ev.details["null_companion"] = "coupling.euler_vs_exact.null";
  res.reports.push_back(ev);
  res.reports.push_back(split_half_report("coupling.euler_vs_exact.null", exact, opt.seed, euler_cfg));
  return res;
}

// --- LERW against SLE_2 -----------------------------------------------------

CompareResult lerw_sle_compare(const CompareConfig& cfg, const RunOptions& opt) {
  if (!(cfg.r_probe > 0.0 && cfg.r_probe < 1.0)) throw std::invalid_argument("lerw_sle_compare: r_probe in (0, 1)");
  LatticeConfig lat;
  lat.mesh = cfg.mesh;
  lat.max_steps = std::max<std::uint64_t>(1'000'000, static_cast<std::uint64_t>(100.0 / (cfg.mesh * cfg.mesh)));

  CompareResult res;
  // Reversed LERW runs from the exit vertex to 0; rotating it so the exit
  // vertex sits on the positive axis matches the SLE start at 1.
  res.lerw_angles = parallel_map(cfg.samples, opt.threads, [&](std::size_t i) {
    const auto s = lerw_curve(lat, derive_seed(opt.seed, i, kCompareLerw));
    const auto& y = s.erased.simple_path;
    const Complex rot = std::conj(y.back()) / std::abs(y.back());
    std::vector<Complex> rev(y.rbegin(), y.rend());
    for (auto& z : rev) z *= rot;
    return *first_crossing_angle(rev, cfg.r_probe);
  });
  res.sle_angles = parallel_map(cfg.samples, opt.threads, [&](std::size_t i) {
    SleConfig sc;
    sc.kappa = cfg.kappa;
    sc.dt = cfg.dt;
    sc.T = cfg.dt * std::ceil((std::log(1.0 / cfg.r_probe) + 0.1) / cfg.dt);
    sc.seed = derive_seed(opt.seed, i, kCompareSle);
    const auto hit = first_hit_radius(sample_chain(sc), cfg.r_probe);
    if (!hit) throw std::logic_error("lerw_sle_compare: trace never reached r_probe");
    return std::arg(hit->crossing);
  });
  const nlohmann::json config = {{"mesh", cfg.mesh},   {"samples", cfg.samples}, {"r_probe", cfg.r_probe},
                                 {"kappa", cfg.kappa}, {"dt", cfg.dt}};
  auto main = ks_report("compare.lerw_vs_sle", res.lerw_angles, res.sle_angles, opt.seed, config);
  main.details["functional"] = "signed angle of the first crossing of |z| = r_probe";
  main.details["null_companion"] = "compare.lerw_split_half";
  res.reports.push_back(main);
  res.reports.push_back(split_half_report("compare.lerw_split_half", res.lerw_angles, opt.seed, config));
  res.reports.push_back(symmetry_report("compare.symmetry.lerw", res.lerw_angles, opt.seed, config));
  res.reports.push_back(symmetry_report("compare.symmetry.sle", res.sle_angles, opt.seed, config));
  return res;
}

// --- Suites -----------------------------------------------------------------

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"loop-erasure", "loewner",  "q-martingale", "two-time",
                                              "conditioned-bm", "coupling", "compare"};
  return names;
}

std::vector<TestReport> run_suite(const std::string& name, const RunOptions& opt) {
  if (name == "loop-erasure") return loop_erasure_suite({}, opt);
  if (name == "loewner") return loewner_engine_suite({}, opt);
  if (name == "q-martingale") {
    std::vector<TestReport> out;
    QMartingaleConfig trivial;
    trivial.z = 0.0;
    trivial.samples = 100;
    auto r0 = q_martingale_test(trivial, opt);
    r0.name = "q_martingale.origin";
    out.push_back(r0);
    out.push_back(q_martingale_test({}, opt));
    QMartingaleConfig control;
    control.kappa = 6.0;
    out.push_back(q_martingale_test(control, opt));
    return out;
  }
  if (name == "two-time") {
    auto out = two_time_weight_test({}, opt);
    for (const auto mode : {Degenerate::bm_at_start, Degenerate::sle_at_start}) {
      TwoTimeConfig d;
      d.samples = 100;
      d.degenerate = mode;
      const auto samples = parallel_map(d.samples, opt.threads, [&](std::size_t i) { return two_time_sample(d, opt.seed, i); });
      const auto ones = static_cast<std::size_t>(
          std::count_if(samples.begin(), samples.end(), [](const TwoTimeSample& s) { return s.m == 1.0; }));
      TestReport r;
      r.name = mode == Degenerate::bm_at_start ? "two_time.degenerate_t1" : "two_time.degenerate_t2";
      r.statistic = static_cast<double>(ones);
      r.reference = static_cast<double>(d.samples);
      r.criterion = "M == 1 exactly for every sample";
      r.pass = ones == d.samples;
      r.samples = d.samples;
      r.seed = opt.seed;
      r.config = {{"r1", d.r1}, {"r2", d.r2}, {"dt", d.dt}};
      out.push_back(r);
    }
    return out;
  }
  if (name == "conditioned-bm") return conditioned_bm_suite({}, opt);
  if (name == "coupling") return coupling_demo({}, opt).reports;
  if (name == "compare") return lerw_sle_compare({}, opt).reports;
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace bmloop::lab
