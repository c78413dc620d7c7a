// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace codesynth {

struct SandboxPolicy {
  double wall_timeout_seconds = 60.0;
  std::size_t max_output_bytes = 1 << 20;  // captured stdout+stderr cap
  std::filesystem::path working_dir;       // private per job
  bool network_disabled = true;

  /// Throws Error(kInvalidArgument) if the timeout is not positive.
  void validate() const;
};

struct ProcessResult {
  int exit_code = -1;    // valid when !signaled
  int signal = 0;        // terminating signal, 0 if exited normally
  bool timed_out = false;
  std::string output;    // interleaved stdout/stderr, truncated to the cap
  double wall_seconds = 0.0;
};

/// Looks up an executable: absolute/relative paths are checked directly,
/// bare names are searched on PATH.
std::optional<std::filesystem::path> find_executable(const std::string& name);

/// Runs argv[0] (already resolved) in `policy.working_dir` as the leader of
/// a fresh process group. On return, every process in that group is gone,
/// including grandchildren that did not change their group. The deadline is
/// absolute so multi-step adapters share one budget.
ProcessResult run_sandboxed(const std::vector<std::string>& argv, const SandboxPolicy& policy,
                            std::chrono::steady_clock::time_point deadline);

}  // namespace codesynth
