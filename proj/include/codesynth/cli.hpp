// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace codesynth {

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,        // zero records, violations, runtime errors
  kExitConfigInvalid = 2,  // bad flags, unknown category, unreadable inputs
  kExitOutputExists = 3,
};

/// Entry point of the `codesynth` tool. `args` excludes the program name.
/// Machine-readable output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codesynth
