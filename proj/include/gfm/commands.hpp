#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gfm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailure = 1,
  kConfigError = 2,
  kIntegrationAbort = 3,
};

/// Simulates one scenario; writes trajectory.csv, summary.json and
/// scenario.json into out_dir.
int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir,
            std::ostream& log);

/// Runs the scenario under DADS and PI, each with the safety filter off and
/// on, applies the trajectory checks that cover each run plus the randomized
/// oracle suites, and writes report.json. Nonzero iff a check fails.
int cmd_verify(const std::filesystem::path& config, const std::filesystem::path& out_dir,
               std::uint64_t seed, std::ostream& log);

/// One simulation per value of a scalar key, run concurrently; each run gets
/// its own subdirectory and sweep.csv / sweep.json summarize them.
int cmd_sweep(const std::filesystem::path& config, const std::string& param,
              const std::vector<double>& values, const std::filesystem::path& out_dir,
              std::ostream& log);

}  // namespace gfm::cli
