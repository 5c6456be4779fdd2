#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixinfer {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,       // unexpected failure
  kExitConfig = 2,         // bad flags, config file, or arguments
  kExitData = 3,           // unreadable or inconsistent input data, solver failure
  kExitNotConverged = 4,   // attack hit max_rounds; the estimate is still written
};

// Runs one subcommand. `args` excludes the program name. Human-readable text
// goes to `out`, diagnostics to `err`; results are written to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixinfer
