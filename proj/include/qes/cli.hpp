#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one CLI invocation. `args` excludes the program name.
/// Subcommands: truncate, spectrum, verify, figure, fit, energy.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands `--config FILE` (a JSON object mirroring the flags) into explicit
/// flags placed after the subcommand. Flags given on the command line win.
/// Keys may be top level or nested under the subcommand name.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace qes::cli
