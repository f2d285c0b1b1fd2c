#pragma once

#include <ostream>

#include "cli/run_config.hpp"

namespace repchain::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,
  kExitCoverageShortfall = 2,
  kExitCompareFailed = 3,
};

/// Parses argv (program name first) and runs the chosen subcommand. Results
/// go to `out` unless --output names a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace repchain::cli
