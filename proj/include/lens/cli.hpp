#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lens/error.hpp"

namespace lens {

// Process exit codes of the `lens` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitBackend = 2,
  kExitImage = 3,
  kExitFailureRate = 4,  // benchmark finished but too many examples failed
  kExitUsage = 64,
};

int exit_code_for(ErrorCode code);

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lens
