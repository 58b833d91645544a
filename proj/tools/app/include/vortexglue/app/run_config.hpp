#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vortexglue/gauge.hpp"
#include "vortexglue/glue_solver.hpp"
#include "vortexglue/vortex_config.hpp"

namespace vortexglue::app {

enum class Command { Radial, Solve, Sweep, Gauge, Audit };

const char* command_name(Command c);

struct ProfileSettings {
  double r_max = 30.0;
  double tol = 1e-9;
};

struct RadialSettings {
  std::vector<int> multiplicities;  // empty: those present in the configuration, else {1, 2, 3}
  int l_max = 8;
  int grid_points = 3000;
};

/// Vortex-bump test function for the distributional check.
struct TestFunctionSpec {
  int vortex = 0;
  double inner = 0.0;
  double outer = 0.0;
};

struct SweepSettingsBlock {
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  std::optional<TestFunctionSpec> test_function;
  bool measure_plain = true;
};

struct GaugeSettings {
  VortexSign sign = VortexSign::Upper;
  double fit_r_min = 5.0;
  double fit_r_max = 15.0;
};

struct AuditSettings {
  int samples = 8;
  int modes = 4;
};

struct RunConfig {
  Command command = Command::Solve;
  bool has_vortices = false;  // the radial command needs no configuration block
  VortexConfiguration config;
  SolverOptions solver;
  ProfileSettings profile;
  RadialSettings radial;
  SweepSettingsBlock sweep;
  GaugeSettings gauge;
  AuditSettings audit;
  std::filesystem::path output = "vortexglue-out";
  std::filesystem::path cache = ".vortexglue-cache";
  int threads = 0;
  std::uint64_t seed = 1;
};

/// Reads and validates a JSON run configuration. Every schema violation found
/// is listed in the thrown ConfigError, one per line.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

/// The effective configuration, defaults filled in.
std::string config_to_json(const RunConfig& config);

}  // namespace vortexglue::app
