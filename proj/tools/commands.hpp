#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace opls::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInputError = 2,
    kNumericalError = 3, // non-convergence and other numerical failures
    kInternalError = 4,
};

/// Parses argv, runs one subcommand and maps exceptions to exit codes.
/// Diagnostics go to `err`, progress summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace opls::cli
