#pragma once

// Command-line front end. Subcommands: sle-trace, lerw, cbm, slit-cbm, erase,
// verify, compare, coupling-demo. Exit codes: 0 success, 1 a test failed or
// the run could not complete, 2 usage or validation error.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace bmloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Default configuration of a subcommand (keys are the long flag names with
/// '-' replaced by '_'). Throws std::invalid_argument for unknown names.
nlohmann::json default_config(const std::string& subcommand);

}  // namespace bmloop::cli
