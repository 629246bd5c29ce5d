#pragma once

// Artifact formats. Numbers are written in the shortest decimal form that
// reads back to the same binary64, so reruns produce identical bytes.

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmloop/lab.hpp"
#include "bmloop/types.hpp"

namespace bmloop::io {

/// Malformed input file; the message names the file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);

/// Header `t,re,im`.
std::string curve_csv(const TimedPath& path);
/// Header `step,re,im`; steps default to 0, 1, 2, ...
std::string steps_csv(std::span<const Complex> points, std::span<const std::size_t> steps = {});
/// {"t": [...], "re": [...], "im": [...]}
nlohmann::json curve_json(const TimedPath& path);

/// A curve read back from CSV. `column` is "t" or "step".
struct CsvCurve {
  std::string column;
  std::vector<double> index;
  std::vector<Complex> points;
};
CsvCurve parse_curve_csv(const std::string& text, const std::string& source);
CsvCurve read_curve_csv(const std::filesystem::path& file);

std::string reports_jsonl(std::span<const lab::TestReport> reports);
std::vector<lab::TestReport> parse_reports_jsonl(const std::string& text, const std::string& source);

std::string read_file(const std::filesystem::path& file);

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputEnv = "BMLOOP_OUTPUT_DIR";

/// $BMLOOP_OUTPUT_DIR if set and non-empty, else ./bmloop-out.
std::filesystem::path default_output_dir();

/// The only place artifacts are written. Relative names are resolved inside
/// the root; anything that would land outside it is rejected.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Throws std::invalid_argument for absolute names or names escaping root.
  std::filesystem::path resolve(const std::string& name) const;

  void write(const std::string& name, const std::string& content, const std::string& kind);
  void write_json(const std::string& name, const nlohmann::json& j, const std::string& kind);

  /// Artifacts written so far, in write order: [{"path", "kind"}].
  const nlohmann::json& artifacts() const { return artifacts_; }

  /// Writes manifest.json: schema version, subcommand, full config, artifacts.
  void write_manifest(const std::string& subcommand, const nlohmann::json& config);

 private:
  std::filesystem::path root_;
  nlohmann::json artifacts_ = nlohmann::json::array();
};

}  // namespace bmloop::io
