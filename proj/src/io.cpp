#include "bmloop/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

namespace bmloop::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void append_row(std::string& out, const std::string& first, Complex z) {
  out += first;
  out += ',';
  out += format_double(z.real());
  out += ',';
  out += format_double(z.imag());
  out += '\n';
}

double parse_number(std::string_view field, const std::string& source, std::size_t line) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParseError(source + ":" + std::to_string(line) + ": not a number: '" + std::string(field) + "'");
  return v;
}

}  // namespace

std::string curve_csv(const TimedPath& path) {
  std::string out = "t,re,im\n";
  for (std::size_t i = 0; i < path.size(); ++i) append_row(out, format_double(path.times[i]), path.points[i]);
  return out;
}

std::string steps_csv(std::span<const Complex> points, std::span<const std::size_t> steps) {
  if (!steps.empty() && steps.size() != points.size())
    throw std::invalid_argument("steps_csv: steps and points differ in length");
  std::string out = "step,re,im\n";
  for (std::size_t i = 0; i < points.size(); ++i) append_row(out, std::to_string(steps.empty() ? i : steps[i]), points[i]);
  return out;
}

nlohmann::json curve_json(const TimedPath& path) {
  std::vector<double> re, im;
  for (const Complex z : path.points) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return {{"t", path.times}, {"re", re}, {"im", im}};
}

CsvCurve parse_curve_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string row;
  std::size_t line = 0;
  CsvCurve out;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    if (out.column.empty()) {
      if (row == "t,re,im") out.column = "t";
      else if (row == "step,re,im") out.column = "step";
      else throw ParseError(source + ":" + std::to_string(line) + ": expected header 't,re,im' or 'step,re,im'");
      continue;
    }
    std::string_view view(row);
    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
      const auto comma = view.find(',', start);
      fields.push_back(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3)
      throw ParseError(source + ":" + std::to_string(line) + ": expected 3 fields, found " + std::to_string(fields.size()));
    out.index.push_back(parse_number(fields[0], source, line));
    out.points.emplace_back(parse_number(fields[1], source, line), parse_number(fields[2], source, line));
  }
  if (out.column.empty()) throw ParseError(source + ": empty file");
  return out;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvCurve read_curve_csv(const fs::path& file) { return parse_curve_csv(read_file(file), file.string()); }

std::string reports_jsonl(std::span<const lab::TestReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

std::vector<lab::TestReport> parse_reports_jsonl(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string row;
  std::size_t line = 0;
  std::vector<lab::TestReport> out;
  while (std::getline(in, row)) {
    ++line;
    if (row.empty()) continue;
    try {
      out.push_back(lab::TestReport::from_json(nlohmann::json::parse(row)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputEnv);
  if (env != nullptr && *env != '\0') return env;
  return "bmloop-out";
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  if (root_.empty()) throw std::invalid_argument("output directory: empty path");
  fs::create_directories(root_);
  root_ = fs::weakly_canonical(root_);
}

fs::path OutputDir::resolve(const std::string& name) const {
  const fs::path rel(name);
  if (name.empty() || rel.is_absolute() || rel.has_root_name())
    throw std::invalid_argument("output name '" + name + "' must be relative to the output directory");
  const fs::path full = fs::weakly_canonical(root_ / rel);
  const auto mismatch = std::mismatch(root_.begin(), root_.end(), full.begin(), full.end());
  if (mismatch.first != root_.end() || full == root_)
    throw std::invalid_argument("output name '" + name + "' resolves outside " + root_.string());
  return full;
}

void OutputDir::write(const std::string& name, const std::string& content, const std::string& kind) {
  const fs::path full = resolve(name);
  fs::create_directories(full.parent_path());
  std::ofstream out(full, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + full.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + full.string());
  artifacts_.push_back({{"path", fs::relative(full, root_).generic_string()}, {"kind", kind}});
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& j, const std::string& kind) {
  write(name, j.dump(2) + "\n", kind);
}

void OutputDir::write_manifest(const std::string& subcommand, const nlohmann::json& config) {
  const nlohmann::json manifest = {{"schema_version", kSchemaVersion},
                                   {"subcommand", subcommand},
                                   {"config", config},
                                   {"artifacts", artifacts_}};
  const fs::path full = resolve("manifest.json");
  std::ofstream out(full, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + full.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace bmloop::io
