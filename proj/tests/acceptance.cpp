// Runs `verify --suite all --seed 7` twice (one and two worker threads),
// grades the acceptance criteria from the written reports plus a few
// independent oracle checks, and prints one PASS/FAIL line per criterion.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "bmloop/cli.hpp"
#include "bmloop/io.hpp"
#include "bmloop/loewner.hpp"
#include "oracles.hpp"

using namespace bmloop;
namespace fs = std::filesystem;

namespace {

struct VerifyRun {
  int code = 0;
  std::string out, err;
  std::map<std::string, double> seconds;  // per suite, from stderr
  std::vector<lab::TestReport> reports;
  std::string reports_bytes, manifest_bytes;
};

VerifyRun verify(const fs::path& dir, unsigned threads) {
  fs::remove_all(dir);
  std::ostringstream out, err;
  VerifyRun v;
  v.code = cli::run({"verify", "--suite", "all", "--seed", "7", "--threads", std::to_string(threads), "--out-dir",
                     dir.string()},
                    out, err);
  v.out = out.str();
  v.err = err.str();
  static const std::regex line(R"(suite (\S+): \d+ reports in ([0-9.]+) s)");
  for (std::sregex_iterator it(v.err.begin(), v.err.end(), line), end; it != end; ++it)
    v.seconds[(*it)[1]] = std::stod((*it)[2]);
  if (fs::exists(dir / "reports.jsonl")) {
    v.reports_bytes = io::read_file(dir / "reports.jsonl");
    v.reports = io::parse_reports_jsonl(v.reports_bytes, (dir / "reports.jsonl").string());
  }
  if (fs::exists(dir / "manifest.json")) v.manifest_bytes = io::read_file(dir / "manifest.json");
  return v;
}

// Collects the individual checks of one criterion.
class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {}

  void check(bool ok, const std::string& what) {
    std::cout << "    [" << (ok ? "ok" : "FAILED") << "] " << what << "\n";
    ok_ = ok_ && ok;
    if (!ok) failed_.push_back(what);
  }

  bool finish() const {
    std::cout << "criterion " << number_ << " " << (ok_ ? "PASS" : "FAIL") << ": " << title_;
    if (!ok_) std::cout << " (" << failed_.size() << " check(s) failed)";
    std::cout << "\n\n";
    return ok_;
  }

 private:
  int number_;
  std::string title_;
  bool ok_ = true;
  std::vector<std::string> failed_;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

const lab::TestReport* find(const VerifyRun& run, const std::string& name) {
  for (const auto& r : run.reports)
    if (r.name == name) return &r;
  return nullptr;
}

// The report exists, its recorded verdict is PASS, and `regrade` (an
// independent reading of its numbers against the stated gate) agrees.
void graded(Criterion& c, const VerifyRun& run, const std::string& name, const std::string& gate,
            const std::function<bool(const lab::TestReport&)>& regrade) {
  const auto* r = find(run, name);
  if (r == nullptr) {
    c.check(false, name + ": report missing");
    return;
  }
  std::string what = name + ": statistic " + num(r->statistic);
  if (r->p_value) what += ", p " + num(*r->p_value);
  what += "; gate " + gate;
  c.check(r->pass && regrade(*r), what);
}

void timing(Criterion& c, const VerifyRun& run, const std::string& suite, double limit) {
  const auto it = run.seconds.find(suite);
  if (it == run.seconds.end()) {
    c.check(false, "runtime of suite " + suite + " not reported");
    return;
  }
  c.check(it->second < limit, "runtime " + num(it->second) + " s < " + num(limit) + " s");
}

double detail(const lab::TestReport& r, const std::string& key) { return r.details.at(key).get<double>(); }

double smooth_driving(double t) { return 0.8 * std::sin(3.0 * t) + 0.5 * t; }

// Error ratios per dt halving of the chain against the oracle RK4 flow.
std::vector<double> oracle_convergence_ratios() {
  const double T = 0.5;
  const std::vector<Complex> probes{{0.3, 0.2}, {-0.5, 0.1}, {0.1, -0.6}, {0.0, 0.45}};
  std::vector<double> err;
  for (double dt : {4e-3, 2e-3, 1e-3, 5e-4}) {
    LoewnerChain chain(dt, smooth_driving(0.0));
    const auto steps = static_cast<std::size_t>(std::lround(T / dt));
    for (std::size_t k = 1; k <= steps; ++k) chain.advance(smooth_driving(dt * static_cast<double>(k)));
    double e = 0.0;
    for (const Complex z : probes)
      e = std::max(e, std::abs(chain.eval_forward(z).value - oracle::rk4_loewner(smooth_driving, z, T, 40000)));
    err.push_back(e);
  }
  std::vector<double> ratios;
  for (std::size_t i = 1; i < err.size(); ++i) ratios.push_back(err[i - 1] / err[i]);
  return ratios;
}

// Radius of the Groetzsch slit with the modulus of {r1 < |z| < r2}, by
// bisection on the quadrature modulus.
double oracle_grotzsch_radius(double r1, double r2) {
  const double m = std::log(r2 / r1) / (2.0 * oracle::kPi);
  double lo = 1e-12, hi = 1.0 - 1e-12;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::grotzsch_modulus_quadrature(mid) > m ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

int main() {
  const fs::path base = BMLOOP_ACCEPTANCE_DIR;
  std::cout << "running verify --suite all --seed 7 with 1 thread\n" << std::flush;
  const VerifyRun one = verify(base / "threads1", 1);
  std::cout << one.err << "\n" << std::flush;
  std::cout << "running verify --suite all --seed 7 with 2 threads\n" << std::flush;
  const VerifyRun two = verify(base / "threads2", 2);
  std::cout << two.err << "\n";
  std::cout << "verify exit codes: " << one.code << ", " << two.code << "\n\n";

  const auto p_gate = [](const lab::TestReport& r) { return r.p_value && *r.p_value > 0.01; };
  bool all = true;

  {
    Criterion c(1, "loop-erasure suite on 1e5 walks, zero failures");
    graded(c, one, "loop_erasure.discrete", "failures == 0 over 1e5 walks at mesh 1/50, cap 1e6",
           [](const lab::TestReport& r) {
             return r.statistic == 0.0 && r.samples == 100'000 && r.config.at("mesh") == 1.0 / 50 &&
                    r.config.at("max_steps") == 1'000'000 && r.config.at("brute_force_max") == 200;
           });
    graded(c, one, "loop_erasure.continuous", "no rejections, control rejected",
           [](const lab::TestReport& r) { return r.statistic == 0.0 && r.details.at("control_rejected") == true; });
    timing(c, one, "loop-erasure", 60);
    all = c.finish() && all;
  }
  {
    Criterion c(2, "Loewner engine: conformal radius, round trip, RK4 convergence order");
    graded(c, one, "loewner.conformal_radius", "max relative error <= 1e-9 for t <= 1",
           [](const lab::TestReport& r) { return r.statistic <= 1e-9 && r.config.at("horizon") == 1.0; });
    graded(c, one, "loewner.round_trip", "max error <= 1e-6 for |z| <= 0.9 at dt 1e-4",
           [](const lab::TestReport& r) {
             return r.statistic <= 1e-6 && r.config.at("dt") == 1e-4 && r.config.at("radius") == 0.9;
           });
    graded(c, one, "loewner.convergence_order", "error ratio per halving within 4 +- 0.5",
           [](const lab::TestReport& r) {
             for (const auto& q : r.details.at("ratios"))
               if (std::abs(q.get<double>() - 4.0) > 0.5) return false;
             return !r.details.at("ratios").empty();
           });
    const auto ratios = oracle_convergence_ratios();
    bool ok = true;
    std::string list;
    for (double q : ratios) {
      ok = ok && std::abs(q - 4.0) <= 0.5;
      list += " " + num(q);
    }
    c.check(ok, "oracle RK4 (test-side integrator) error ratios:" + list);
    timing(c, one, "loewner", 30);
    all = c.finish() && all;
  }
  {
    Criterion c(3, "Q_t(z) martingale at kappa 2, kappa 6 control rejected");
    const Complex z(-0.3, 0.0);
    const double q0 = oracle::poisson(1.0, z);
    graded(c, one, "q_martingale.kappa2", "|mean - Q_0(z)| <= 3 se, N = 1e5, z = -0.3, t = 0.5, dt = 1e-3",
           [&](const lab::TestReport& r) {
             return r.samples == 100'000 && r.config.at("t") == 0.5 && r.config.at("dt") == 1e-3 &&
                    std::abs(detail(r, "mean") - q0) <= 3.0 * detail(r, "se");
           });
    const double drift = oracle::q_drift_finite_difference(6.0, z);
    c.check(drift > 0.0, "finite-difference drift at kappa 6 is " + num(drift) + " (direction of the control)");
    graded(c, one, "q_martingale.control", "(mean - Q_0(z)) sign(drift) > 3 se", [&](const lab::TestReport& r) {
      return r.config.at("kappa") == 6.0 && (detail(r, "mean") - q0) * (drift > 0 ? 1.0 : -1.0) > 3.0 * detail(r, "se");
    });
    timing(c, one, "q-martingale", 600);
    all = c.finish() && all;
  }
  {
    Criterion c(4, "two-time weight: mean M = 1 and the per-sample modulus bound");
    const double rm = oracle_grotzsch_radius(0.3, 0.7);
    const double bound = std::log((1.0 + rm) / (1.0 - rm));
    graded(c, one, "two_time.mean_weight", "|mean M - 1| <= 3 se, N = 1e4", [](const lab::TestReport& r) {
      return r.samples == 10'000 && std::abs(r.statistic - 1.0) <= 3.0 * detail(r, "se");
    });
    graded(c, one, "two_time.log_bound", "max |ln N| <= " + num(bound) + " (quadrature r_m " + num(rm) + ")",
           [&](const lab::TestReport& r) {
             return r.details.at("violations") == 0 && r.statistic <= bound &&
                    std::abs(detail(r, "r_m") - rm) < 1e-6;
           });
    timing(c, one, "two-time", 900);
    all = c.finish() && all;
  }
  {
    Criterion c(5, "conditioned Brownian motion: arrival, rotation, cross-validation, time change, mixture");
    graded(c, one, "conditioned_bm.arrival", "fraction >= 0.99 within 0.1 of the pole, N = 1e4",
           [](const lab::TestReport& r) { return r.statistic >= 0.99 && r.samples == 10'000; });
    graded(c, one, "conditioned_bm.rotation", "p > 0.01", p_gate);
    for (const std::string f : {"probe_angle", "final_angle"})
      graded(c, one, "conditioned_bm.sde_vs_exact." + f, "p > 0.01 with 5000 per sampler",
             [&](const lab::TestReport& r) { return p_gate(r) && r.details.at("n_a") == 5000 && r.details.at("n_b") == 5000; });
    graded(c, one, "conditioned_bm.time_change", "max |u(v(t)) / t - 1| <= 0.01",
           [](const lab::TestReport& r) { return r.statistic <= 0.01; });
    graded(c, one, "conditioned_bm.mixture", "p > 0.01", p_gate);
    graded(c, one, "conditioned_bm.mixture_control", "fixed pole fails: p <= 0.01",
           [](const lab::TestReport& r) { return r.p_value && *r.p_value <= 0.01; });
    timing(c, one, "conditioned-bm", 600);
    all = c.finish() && all;
  }
  {
    Criterion c(6, "coupling demo: tip arrival, curve avoidance, Euler against exact");
    graded(c, one, "coupling.tip_arrival", ">= 0.95 of 1000 paths at t2 = 0.5", [](const lab::TestReport& r) {
      return r.statistic >= 0.95 && r.samples == 1000 && r.config.at("t2") == 0.5;
    });
    graded(c, one, "coupling.avoidance", ">= 0.95 of 1000 paths",
           [](const lab::TestReport& r) { return r.statistic >= 0.95 && r.samples == 1000; });
    graded(c, one, "coupling.euler_vs_exact", "p > 0.01 at |z| = 0.2", [&](const lab::TestReport& r) {
      return p_gate(r) && r.config.at("euler_radius") == 0.2;
    });
    const fs::path doc = fs::path(BMLOOP_SOURCE_DIR) / "docs" / "calibration.md";
    c.check(fs::exists(doc), "threshold calibration documented in docs/calibration.md");
    timing(c, one, "coupling", 1200);
    all = c.finish() && all;
  }
  {
    Criterion c(7, "LERW against SLE_2 at the probe circle");
    graded(c, one, "compare.lerw_vs_sle", "p > 0.01, mesh 1/200, 2000 each, r_probe 0.5",
           [&](const lab::TestReport& r) {
             return p_gate(r) && r.config.at("mesh") == 1.0 / 200 && r.config.at("samples") == 2000 &&
                    r.config.at("r_probe") == 0.5;
           });
    graded(c, one, "compare.lerw_split_half", "null calibration p > 0.01", p_gate);
    timing(c, one, "compare", 1800);
    all = c.finish() && all;
  }
  {
    Criterion c(8, "determinism across runs and thread counts");
    c.check(!one.reports_bytes.empty() && one.reports.size() == two.reports.size(),
            "both runs wrote reports.jsonl (" + std::to_string(one.reports.size()) + " reports)");
    c.check(one.reports_bytes == two.reports_bytes, "reports.jsonl byte-identical for --threads 1 and 2");
    c.check(!one.manifest_bytes.empty() && one.manifest_bytes == two.manifest_bytes,
            "manifest.json byte-identical for --threads 1 and 2");
    all = c.finish() && all;
  }

  std::cout << (all ? "all acceptance criteria PASS" : "some acceptance criteria FAIL") << "\n";
  return all ? 0 : 1;
}
