#include "bmloop/cli.hpp"

#include <charconv>
#include <chrono>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "bmloop/conditioned_bm.hpp"
#include "bmloop/io.hpp"
#include "bmloop/lab.hpp"
#include "bmloop/loop_erasure.hpp"
#include "bmloop/parallel.hpp"
#include "bmloop/rng.hpp"
#include "bmloop/sle.hpp"
#include "bmloop/walkers.hpp"

namespace bmloop::cli {

namespace {

using nlohmann::json;

/// Bad flag or config value; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kIntegerKeys{"N", "seed", "euler_samples", "exported_paths"};
const std::set<std::string> kStringKeys{"format", "sampler", "in", "out", "suite"};

const std::vector<std::string> kSubcommands{"sle-trace", "lerw", "cbm", "slit-cbm", "erase", "verify", "compare",
                                            "coupling-demo"};

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& c : f)
    if (c == '_') c = '-';
  return "--" + f;
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(what + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw UsageError(what + ": expected a finite number, got '" + text + "'");
  return v;
}

/// Sets cfg[key] from a JSON value, checking its type against the key.
void assign(json& cfg, const std::string& key, const json& value, const std::string& what) {
  if (!cfg.contains(key)) throw UsageError(what + ": unknown key '" + key + "'");
  if (kStringKeys.count(key)) {
    if (!value.is_string()) throw UsageError(what + ": '" + key + "' must be a string");
  } else if (kIntegerKeys.count(key)) {
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
      throw UsageError(what + ": '" + key + "' must be a non-negative integer");
  } else if (!value.is_number()) {
    throw UsageError(what + ": '" + key + "' must be a number");
  }
  cfg[key] = value;
}

void assign_text(json& cfg, const std::string& key, const std::string& text) {
  const std::string what = flag_name(key);
  if (kStringKeys.count(key)) cfg[key] = text;
  else if (kIntegerKeys.count(key)) cfg[key] = parse_uint(text, what);
  else cfg[key] = parse_real(text, what);
}

template <class T>
T get(const json& cfg, const std::string& key) {
  return cfg.at(key).get<T>();
}

std::string indexed(const std::string& stem, std::size_t i, std::size_t n) {
  if (n == 1) return stem;
  std::string digits = std::to_string(i);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return stem + "_" + digits;
}

void write_curve(io::OutputDir& dir, const std::string& stem, const TimedPath& path, const std::string& kind,
                 const std::string& format) {
  if (format == "json") dir.write_json(stem + ".json", io::curve_json(path), kind);
  else dir.write(stem + ".csv", io::curve_csv(path), kind);
}

void write_steps(io::OutputDir& dir, const std::string& stem, std::span<const Complex> pts,
                 std::span<const std::size_t> steps, const std::string& kind, const std::string& format) {
  if (format == "json") {
    TimedPath p;
    for (std::size_t i = 0; i < pts.size(); ++i) p.push_back(static_cast<double>(steps.empty() ? i : steps[i]), pts[i]);
    json j = io::curve_json(p);
    j["step"] = j["t"];
    j.erase("t");
    dir.write_json(stem + ".json", j, kind);
  } else {
    dir.write(stem + ".csv", io::steps_csv(pts, steps), kind);
  }
}

bool report_lines(const std::vector<lab::TestReport>& reports, std::ostream& out) {
  bool ok = true;
  for (const auto& r : reports) {
    out << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(44) << r.name << " statistic=" << r.statistic;
    if (r.p_value) out << " p=" << *r.p_value;
    out << "  (" << r.criterion << ")\n";
    ok = ok && r.pass;
  }
  return ok;
}

struct Context {
  json cfg;
  unsigned threads = 1;
  io::OutputDir* dir = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

std::string checked_format(const json& cfg) {
  const auto f = get<std::string>(cfg, "format");
  if (f != "csv" && f != "json") throw UsageError("--format: expected 'csv' or 'json', got '" + f + "'");
  return f;
}

int cmd_sle_trace(Context& c) {
  SleConfig sc;
  sc.kappa = get<double>(c.cfg, "kappa");
  sc.T = get<double>(c.cfg, "T");
  sc.dt = get<double>(c.cfg, "dt");
  sc.seed = get<std::uint64_t>(c.cfg, "seed");
  const auto format = checked_format(c.cfg);
  sc.validate_trace();
  const auto chain = sample_chain(sc);
  write_curve(*c.dir, "trace", trace_of(chain, c.threads), "trace", format);
  c.dir->write_json("trace_meta.json", {{"kappa", sc.kappa}, {"dt", sc.dt}, {"T", sc.T}, {"seed", sc.seed}}, "metadata");
  c.dir->write_json("chain.json", chain.to_json(), "driving");
  *c.out << "trace: " << chain.steps() + 1 << " points\n";
  return kExitOk;
}

int cmd_lerw(Context& c) {
  LatticeConfig lat;
  lat.mesh = get<double>(c.cfg, "mesh");
  lat.max_steps = std::max<std::uint64_t>(lat.max_steps, static_cast<std::uint64_t>(100.0 / (lat.mesh * lat.mesh)));
  const auto n = get<std::uint64_t>(c.cfg, "N");
  const auto seed = get<std::uint64_t>(c.cfg, "seed");
  const auto format = checked_format(c.cfg);
  lat.validate();
  if (n == 0) throw UsageError("--N: must be at least 1");
  const auto samples =
      parallel_map(n, c.threads, [&](std::size_t i) { return lerw_curve(lat, n == 1 ? seed : derive_seed(seed, i, 1)); });
  for (std::size_t i = 0; i < n; ++i) {
    write_steps(*c.dir, indexed("walk", i, n), samples[i].walk, {}, "walk", format);
    write_steps(*c.dir, indexed("lerw", i, n), samples[i].erased.simple_path, samples[i].erased.index_map, "lerw", format);
  }
  *c.out << n << " walk(s) written\n";
  return kExitOk;
}

CbmConfig cbm_config(const json& cfg) {
  CbmConfig cc;
  cc.h = get<double>(cfg, "h");
  cc.boundary_factor = get<double>(cfg, "boundary_factor");
  cc.seed = get<std::uint64_t>(cfg, "seed");
  return cc;
}

int cmd_cbm(Context& c) {
  CbmConfig cc = cbm_config(c.cfg);
  cc.rho = BoundaryPoint(get<double>(c.cfg, "rho"));
  cc.stop_radius = get<double>(c.cfg, "stop_radius");
  const auto sampler = get<std::string>(c.cfg, "sampler");
  if (sampler != "sde" && sampler != "halfplane")
    throw UsageError("--sampler: expected 'sde' or 'halfplane', got '" + sampler + "'");
  const auto n = get<std::uint64_t>(c.cfg, "N");
  if (n == 0) throw UsageError("--N: must be at least 1");
  const auto format = checked_format(c.cfg);
  cc.validate();
  const auto paths = parallel_map(n, c.threads, [&](std::size_t i) {
    CbmConfig ci = cc;
    ci.seed = n == 1 ? cc.seed : derive_seed(cc.seed, i, 1);
    return sampler == "sde" ? sample_cbm_sde(ci) : sample_cbm_halfplane(ci);
  });
  for (std::size_t i = 0; i < n; ++i) write_curve(*c.dir, indexed("cbm", i, n), paths[i], "cbm-path", format);
  *c.out << n << " path(s) written\n";
  return kExitOk;
}

int cmd_slit_cbm(Context& c) {
  SleConfig sc;
  sc.kappa = 2.0;
  sc.T = get<double>(c.cfg, "t2");
  sc.dt = get<double>(c.cfg, "dt");
  sc.seed = get<std::uint64_t>(c.cfg, "seed");
  const auto format = checked_format(c.cfg);
  CbmConfig cc = cbm_config(c.cfg);
  const auto n = get<std::uint64_t>(c.cfg, "N");
  if (n == 0) throw UsageError("--N: must be at least 1");
  sc.validate_trace();
  cc.validate();
  const auto chain = sample_chain(sc);
  const auto paths = parallel_map(n, c.threads, [&](std::size_t i) {
    CbmConfig ci = cc;
    ci.seed = derive_seed(sc.seed, i, 2);
    return sample_cbm_slit(chain, chain.steps(), ci);
  });
  write_curve(*c.dir, "trace", trace_of(chain, c.threads), "trace", format);
  c.dir->write_json("chain.json", chain.to_json(), "driving");
  for (std::size_t i = 0; i < n; ++i) write_curve(*c.dir, indexed("path", i, n), paths[i], "slit-cbm-path", format);
  *c.out << n << " path(s) written\n";
  return kExitOk;
}

int cmd_erase(Context& c) {
  const auto in = get<std::string>(c.cfg, "in");
  const auto out = get<std::string>(c.cfg, "out");
  if (in.empty()) throw UsageError("--in: input CSV is required");
  io::CsvCurve curve;
  try {
    curve = io::read_curve_csv(in);
  } catch (const io::ParseError& e) {
    throw UsageError(std::string("--in: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(std::string("--in: ") + e.what());
  }
  if (curve.points.empty()) throw UsageError("--in: " + in + " has no rows");
  const auto er = erase_loops(DiscretePath(curve.points));
  c.dir->write(out, io::steps_csv(er.simple_path, er.index_map), "lerw");
  *c.out << curve.points.size() << " vertices in, " << er.simple_path.size() << " out\n";
  return kExitOk;
}

int cmd_verify(Context& c) {
  if (c.cfg.at("seed").is_null()) throw UsageError("--seed is required for verify");
  const auto suite = get<std::string>(c.cfg, "suite");
  std::vector<std::string> names;
  if (suite == "all") names = lab::suite_names();
  else {
    const auto& known = lab::suite_names();
    if (std::find(known.begin(), known.end(), suite) == known.end()) {
      std::string list;
      for (const auto& k : known) list += " " + k;
      throw UsageError("--suite: unknown suite '" + suite + "' (expected all or one of:" + list + ")");
    }
    names.push_back(suite);
  }
  lab::RunOptions opt{get<std::uint64_t>(c.cfg, "seed"), c.threads};
  std::vector<lab::TestReport> all;
  for (const auto& name : names) {
    const auto t0 = std::chrono::steady_clock::now();
    auto reports = lab::run_suite(name, opt);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Timings go to stderr only: artifacts must not depend on the machine.
    *c.err << "suite " << name << ": " << reports.size() << " reports in " << std::fixed << std::setprecision(2) << sec
           << " s\n"
           << std::defaultfloat;
    all.insert(all.end(), reports.begin(), reports.end());
  }
  c.dir->write("reports.jsonl", io::reports_jsonl(all), "reports");
  return report_lines(all, *c.out) ? kExitOk : kExitFailure;
}

int cmd_compare(Context& c) {
  lab::CompareConfig cc;
  cc.mesh = get<double>(c.cfg, "mesh");
  cc.samples = get<std::uint64_t>(c.cfg, "N");
  cc.r_probe = get<double>(c.cfg, "r_probe");
  cc.dt = get<double>(c.cfg, "dt");
  cc.kappa = get<double>(c.cfg, "kappa");
  if (cc.samples < 2) throw UsageError("--N: must be at least 2");
  const auto res = lab::lerw_sle_compare(cc, {get<std::uint64_t>(c.cfg, "seed"), c.threads});
  std::string csv = "sample,lerw,sle\n";
  for (std::size_t i = 0; i < res.lerw_angles.size(); ++i)
    csv += std::to_string(i) + "," + io::format_double(res.lerw_angles[i]) + "," + io::format_double(res.sle_angles[i]) + "\n";
  c.dir->write("angles.csv", csv, "angles");
  c.dir->write("reports.jsonl", io::reports_jsonl(res.reports), "reports");
  return report_lines(res.reports, *c.out) ? kExitOk : kExitFailure;
}

int cmd_coupling(Context& c) {
  lab::CouplingConfig cc;
  cc.t2 = get<double>(c.cfg, "t2");
  cc.paths = get<std::uint64_t>(c.cfg, "N");
  cc.dt = get<double>(c.cfg, "dt");
  cc.h = get<double>(c.cfg, "h");
  cc.boundary_factor = get<double>(c.cfg, "boundary_factor");
  cc.euler_samples = get<std::uint64_t>(c.cfg, "euler_samples");
  cc.exported_paths = get<std::uint64_t>(c.cfg, "exported_paths");
  const auto format = checked_format(c.cfg);
  if (cc.paths == 0) throw UsageError("--N: must be at least 1");
  if (cc.euler_samples < 2) throw UsageError("--euler-samples: must be at least 2");
  const auto res = lab::coupling_demo(cc, {get<std::uint64_t>(c.cfg, "seed"), c.threads});
  write_curve(*c.dir, "trace", res.bundle.trace, "trace", format);
  write_curve(*c.dir, "reversal", res.bundle.reversal, "reversal", format);
  c.dir->write_json("chain.json", res.bundle.chain, "driving");
  for (std::size_t i = 0; i < res.bundle.paths.size(); ++i)
    write_curve(*c.dir, "paths/" + indexed("path", i, res.bundle.paths.size() + 1), res.bundle.paths[i], "slit-cbm-path",
                format);
  c.dir->write("reports.jsonl", io::reports_jsonl(res.reports), "reports");
  return report_lines(res.reports, *c.out) ? kExitOk : kExitFailure;
}

using Command = int (*)(Context&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m{
      {"sle-trace", cmd_sle_trace}, {"lerw", cmd_lerw},     {"cbm", cmd_cbm},
      {"slit-cbm", cmd_slit_cbm},   {"erase", cmd_erase},   {"verify", cmd_verify},
      {"compare", cmd_compare},     {"coupling-demo", cmd_coupling}};
  return m;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> m{
      {"sle-trace", "Sample a radial SLE_kappa trace (kappa <= 4)"},
      {"lerw", "Loop-erased random walk on mesh * Z^2 from 0 to the unit circle"},
      {"cbm", "Brownian motion in the disk conditioned to exit at e^{i rho}"},
      {"slit-cbm", "Conditioned Brownian motion in the disk slit by an SLE_2 trace, aimed at its tip"},
      {"erase", "Loop-erase a path read from CSV"},
      {"verify", "Run verification suites and write JSON-lines reports"},
      {"compare", "LERW against SLE_2: first-crossing angle of |z| = r_probe"},
      {"coupling-demo", "SLE_2 trace with conditioned Brownian paths aimed at its tip"}};
  return m;
}

}  // namespace

json default_config(const std::string& subcommand) {
  if (subcommand == "sle-trace") return {{"kappa", 2.0}, {"T", 1.0}, {"dt", 1e-4}, {"seed", 0}, {"format", "csv"}};
  if (subcommand == "lerw") return {{"mesh", 0.01}, {"N", 1}, {"seed", 0}, {"format", "csv"}};
  if (subcommand == "cbm")
    return {{"rho", 0.0},           {"h", 1e-4}, {"stop_radius", 1.0 - 1e-3}, {"boundary_factor", 0.1},
            {"sampler", "sde"},     {"N", 1},    {"seed", 0},                 {"format", "csv"}};
  if (subcommand == "slit-cbm")
    return {{"t2", 0.5}, {"dt", 1e-3}, {"h", 1e-4}, {"boundary_factor", 0.1}, {"N", 1}, {"seed", 0}, {"format", "csv"}};
  if (subcommand == "erase") return {{"in", ""}, {"out", "lerw.csv"}};
  if (subcommand == "verify") return {{"suite", "all"}, {"seed", nullptr}};
  if (subcommand == "compare")
    return {{"mesh", 1.0 / 200.0}, {"N", 2000}, {"r_probe", 0.5}, {"dt", 1e-4}, {"kappa", 2.0}, {"seed", 0}};
  if (subcommand == "coupling-demo")
    return {{"t2", 0.5},         {"N", 1000},       {"dt", 1e-3},    {"h", 1e-4},         {"boundary_factor", 0.1},
            {"euler_samples", 1000}, {"exported_paths", 20}, {"seed", 0}, {"format", "csv"}};
  throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loop-erasure of plane Brownian motion and radial SLE_2: samplers and verification suites", "bmloop"};
  app.require_subcommand(1);
  // Long form only: -h would clash with the step-size flag --h.
  app.set_help_flag("--help", "Print this help message and exit");
  unsigned threads = 1;
  std::string out_dir, config_file;
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, std::string("Output directory (default $") + io::kOutputEnv + " or ./bmloop-out)");
  app.add_option("--config", config_file, "JSON config (or a manifest.json to rerun); flags win on conflict");

  std::map<std::string, std::map<std::string, std::optional<std::string>>> raw;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : kSubcommands) {
    auto* sub = app.add_subcommand(name, descriptions().at(name));
    sub->fallthrough();
    subs[name] = sub;
    const json defaults = default_config(name);
    for (const auto& [key, value] : defaults.items()) {
      std::string help = "default: " + (value.is_null() ? std::string("(required)") : value.dump());
      sub->add_option(flag_name(key), raw[name][key], help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kExitOk;
    err << "run 'bmloop --help' for usage\n";
    return kExitUsage;
  }

  std::string name;
  for (const auto& [n, sub] : subs)
    if (sub->parsed()) name = n;

  try {
    json cfg = default_config(name);
    if (!config_file.empty()) {
      json file;
      try {
        file = json::parse(io::read_file(config_file));
      } catch (const std::exception& e) {
        throw UsageError("--config: " + std::string(e.what()));
      }
      if (!file.is_object()) throw UsageError("--config: expected a JSON object");
      if (file.contains("schema_version")) {
        if (file["schema_version"] != io::kSchemaVersion)
          throw UsageError("--config: unsupported manifest schema_version " + file["schema_version"].dump());
        if (file.value("subcommand", "") != name)
          throw UsageError("--config: manifest is for '" + file.value("subcommand", "") + "', not '" + name + "'");
        file = file.at("config");
      }
      for (const auto& [key, value] : file.items()) assign(cfg, key, value, "--config " + config_file);
    }
    for (const auto& [key, value] : raw[name])
      if (value) assign_text(cfg, key, *value);

    if (name == "verify" && cfg.at("seed").is_null()) throw UsageError("--seed is required for verify");
    io::OutputDir dir(out_dir.empty() ? io::default_output_dir() : std::filesystem::path(out_dir));
    Context ctx{cfg, threads, &dir, &out, &err};
    const int code = commands().at(name)(ctx);
    dir.write_manifest(name, cfg);
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace bmloop::cli
