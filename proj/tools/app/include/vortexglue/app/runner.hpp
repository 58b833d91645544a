#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "vortexglue/app/run_config.hpp"

namespace vortexglue::app {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

/// Command-line settings that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> cache;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool no_preconditioner = false;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Executes the configured pipeline, writing config.json, report.json and
/// metadata.json plus command-specific artifacts under config.output. The
/// summary table goes to `out`, failures to `err`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_config + apply_overrides + run, mapping every failure to its exit code.
int run_file(const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& out,
             std::ostream& err);

}  // namespace vortexglue::app
