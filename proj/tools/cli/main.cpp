#include <iostream>

#include <CLI11.hpp>

#include "vortexglue/app/runner.hpp"

int main(int argc, char** argv) {
  using namespace vortexglue::app;
  CLI::App cli{"Glued multi-vortex solver for the abelian Higgs self-dual equations"};
  cli.set_version_flag("--version", VORTEXGLUE_VERSION);
  std::string config_path;
  std::string out_dir, cache_dir;
  int threads = -1;
  std::uint64_t seed = 0;
  bool no_precond = false;
  cli.add_option("config,-c,--config", config_path, "JSON run configuration")->required();
  auto* out_opt = cli.add_option("-o,--out", out_dir, "output directory (overrides the config)");
  auto* cache_opt = cli.add_option("--cache", cache_dir, "profile cache directory, empty to disable");
  auto* threads_opt = cli.add_option("-j,--threads", threads, "worker threads, 0 for all cores")
                          ->check(CLI::NonNegativeNumber);
  auto* seed_opt = cli.add_option("--seed", seed, "seed for randomized audits");
  cli.add_flag("--no-precond", no_precond, "solve the linear steps without the approximate inverse");
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  Overrides o;
  if (*out_opt) o.output = out_dir;
  if (*cache_opt) o.cache = cache_dir;
  if (*threads_opt) o.threads = threads;
  if (*seed_opt) o.seed = seed;
  o.no_preconditioner = no_precond;
  try {
    return run_file(config_path, o, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
