#pragma once

#include <iosfwd>

namespace fphmc::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kNotConverged = 3,
  kBootstrapUnstable = 4,
};

// Entry point behind the fphmc executable. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fphmc::cli
