#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascade::cli {

/// Exit codes of the command-line driver.
enum ExitCode : int { kSuccess = 0, kConfigError = 1, kNumericalError = 2 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "CASCADE_OUT_DIR";

/// Runs one subcommand (pairs, histogram, chsh, phase-match, memory, repeater).
/// `args` excludes the program name. The one-line summary goes to `out`,
/// diagnostics and usage to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cascade::cli
