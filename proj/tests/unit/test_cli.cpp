#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "vortexglue/app/run_config.hpp"
#include "vortexglue/app/runner.hpp"
#include "vortexglue/errors.hpp"

using namespace vortexglue;
using namespace vortexglue::app;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "vortexglue_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

// Small two-vortex torus; `extra` is spliced into the top-level object.
std::string torus_config(const std::string& command, double delta, const std::string& extra = "") {
  std::ostringstream s;
  s << R"({"command": ")" << command << R"(", "domain": {"boundary": "periodic", "lx": 2.0, "ly": 1.0},)"
    << R"("vortices": [{"x": 0.375, "y": 0.375}, {"x": 1.375, "y": 0.375}], "delta": )" << delta;
  if (!extra.empty()) s << ", " << extra;
  s << "}";
  return s.str();
}

int run_text(const std::string& name, const std::string& text, const fs::path& out, std::string* summary = nullptr,
             std::string* errors = nullptr) {
  const fs::path cfg = write_file(name + ".json", text);
  Overrides o;
  o.output = out;
  o.cache = scratch() / "cache";
  std::ostringstream so, se;
  const int code = run_file(cfg, o, so, se);
  if (summary) *summary = so.str();
  if (errors) *errors = se.str();
  return code;
}

}  // namespace

TEST_CASE("minimal config gets documented defaults") {
  const RunConfig rc = parse_config_text(
      R"({"domain": {"lx": 4, "ly": 2}, "vortices": [{"x": 1, "y": 1}], "delta": 0.1})");
  CHECK(rc.command == Command::Solve);
  CHECK(rc.config.domain.boundary == Boundary::Periodic);
  CHECK(rc.config.vortices.size() == 1);
  CHECK(rc.config.vortices[0].multiplicity == 1);
  CHECK(rc.config.delta == 0.1);
  CHECK_FALSE(rc.config.r0.has_value());
  CHECK(rc.solver.tol == 1e-8);
  CHECK(rc.solver.h == 1.0 / 16);
  CHECK(rc.solver.max_iter == 50);
  CHECK(rc.solver.use_preconditioner);
  CHECK(rc.solver.strategy == Strategy::Frozen);
  CHECK(rc.profile.r_max == 30.0);
  CHECK(rc.profile.tol == 1e-9);
  CHECK(rc.sweep.deltas == std::vector<double>{0.2, 0.1, 0.05, 0.025});
  CHECK(rc.output == "vortexglue-out");
  CHECK(rc.cache == ".vortexglue-cache");
  CHECK(rc.threads == 0);
  CHECK(rc.seed == 1);

  // the effective configuration round-trips
  const RunConfig again = parse_config_text(config_to_json(rc));
  CHECK(config_to_json(again) == config_to_json(rc));
}

TEST_CASE("schema violations") {
  SUBCASE("non-positive delta names the field") {
    const std::string msg = config_error(torus_config("solve", 0.0));
    CHECK(msg.find("delta") != std::string::npos);
    CHECK(msg.find("> 0") != std::string::npos);
    CHECK(config_error(torus_config("solve", -0.1)).find("delta") != std::string::npos);
  }
  SUBCASE("coincident vortices cite the separation constraint") {
    const std::string msg = config_error(
        R"({"domain": {"lx": 2, "ly": 1}, "vortices": [{"x": 0.5, "y": 0.5}, {"x": 0.5, "y": 0.5}], "delta": 0.1})");
    CHECK(msg.find("coincide") != std::string::npos);
    CHECK(msg.find("d must be > 0") != std::string::npos);
  }
  SUBCASE("unknown keys are all listed") {
    const std::string msg = config_error(torus_config("solve", 0.1, R"("colour": 1, "solver": {"tolerance": 1e-8})"));
    CHECK(msg.find("2 error(s)") != std::string::npos);
    CHECK(msg.find("colour: unknown key") != std::string::npos);
    CHECK(msg.find("solver.tolerance: unknown key") != std::string::npos);
  }
  SUBCASE("every violation is reported at once") {
    const std::string msg = config_error(R"({"command": "fly", "domain": {"lx": -1, "ly": 1}, "vortices": []})");
    CHECK(msg.find("command") != std::string::npos);
    CHECK(msg.find("domain.lx") != std::string::npos);
    CHECK(msg.find("vortices") != std::string::npos);
  }
  SUBCASE("other lengths must be positive") {
    CHECK(config_error(torus_config("solve", 0.1, R"("r0": 0)")).find("r0") != std::string::npos);
    CHECK(config_error(torus_config("solve", 0.1, R"("solver": {"h": -1})")).find("solver.h") != std::string::npos);
    CHECK(config_error(torus_config("sweep", 0.1, R"("sweep": {"deltas": [0.1, 0]})")).find("sweep.deltas[1]") !=
          std::string::npos);
  }
  SUBCASE("malformed JSON") { CHECK_THROWS_AS(parse_config_text("{\"domain\": "), ConfigError); }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(parse_config(scratch() / "no_such.json"), ConfigError);
    std::ostringstream so, se;
    CHECK(run_file(scratch() / "no_such.json", {}, so, se) == kExitConfig);
    CHECK(se.str().find("no_such.json") != std::string::npos);
  }
}

TEST_CASE("radial command reuses the profile cache") {
  const std::string text = R"({"command": "radial", "radial": {"multiplicities": [1]}})";
  fs::remove_all(scratch() / "cache");
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run_text("radial", text, scratch() / "radial_cold") == kExitOk);
  const auto t1 = std::chrono::steady_clock::now();
  REQUIRE(run_text("radial", text, scratch() / "radial_warm") == kExitOk);
  const auto t2 = std::chrono::steady_clock::now();
  const double cold = std::chrono::duration<double>(t1 - t0).count();
  const double warm = std::chrono::duration<double>(t2 - t1).count();
  CHECK(cold >= 10.0 * warm);

  const auto meta_cold = nlohmann::json::parse(read_file(scratch() / "radial_cold" / "metadata.json"));
  const auto meta_warm = nlohmann::json::parse(read_file(scratch() / "radial_warm" / "metadata.json"));
  CHECK(meta_cold["cache_misses"] == 1);
  CHECK(meta_warm["cache_hits"] == 1);
  CHECK(meta_warm["cache_misses"] == 0);
  CHECK(read_file(scratch() / "radial_cold" / "radial" / "profile_N1.csv") ==
        read_file(scratch() / "radial_warm" / "radial" / "profile_N1.csv"));
  const auto report = nlohmann::json::parse(read_file(scratch() / "radial_warm" / "report.json"));
  CHECK(report["status"] == kExitOk);
}

TEST_CASE("solve command") {
  std::string summary;
  const fs::path a = scratch() / "solve_a", b = scratch() / "solve_b";
  REQUIRE(run_text("solve", torus_config("solve", 0.1), a, &summary) == kExitOk);
  REQUIRE(run_text("solve", torus_config("solve", 0.1), b) == kExitOk);
  for (const char* f : {"config.json", "report.json", "metadata.json", "fields/u.bin", "fields/u.json",
                        "fields/exp_u.bin", "fields/z.bin", "fields/u_smooth_row.csv"})
    CHECK_MESSAGE(fs::exists(a / f), f);
  CHECK(summary.find("flux") != std::string::npos);

  const auto report = nlohmann::json::parse(read_file(a / "report.json"));
  CHECK(report["status"] == kExitOk);
  CHECK(report["solve"]["converged"] == true);
  CHECK(report["flux"]["relative_error"].get<double>() <= 1e-3);

  // deterministic outputs: only metadata carries time
  for (const char* f : {"report.json", "fields/u.bin", "fields/u.json", "fields/z.bin", "fields/u_smooth_row.csv"})
    CHECK_MESSAGE(read_file(a / f) == read_file(b / f), f);
  const auto meta = nlohmann::json::parse(read_file(a / "metadata.json"));
  CHECK(meta.contains("timestamp"));
}

TEST_CASE("sweep command") {
  const fs::path out = scratch() / "sweep";
  std::string summary;
  REQUIRE(run_text("sweep", torus_config("sweep", 0.1, R"("sweep": {"deltas": [0.2, 0.1], "measure_plain": false})"),
                   out, &summary) == kExitOk);
  std::ifstream csv(out / "sweep.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2);
  const auto fits = nlohmann::json::parse(read_file(out / "fits.json"));
  CHECK(fits.contains("z_sup"));
  CHECK(fits.contains("distributional"));
  CHECK(summary.find("fit ln sup|z|") != std::string::npos);
}

TEST_CASE("exit codes") {
  SUBCASE("solver failure is 3 with the trace written") {
    const std::string text =
        R"({"domain": {"lx": 1, "ly": 1}, "vortices": [{"x": 0.375, "y": 0.375}], "delta": 0.3,)"
        R"( "solver": {"max_iter": 8}})";
    std::string summary;
    const fs::path out = scratch() / "obstruction";
    CHECK(run_text("obstruction", text, out, &summary) == kExitSolver);
    CHECK(summary.find("warning") != std::string::npos);
    const auto report = nlohmann::json::parse(read_file(out / "report.json"));
    CHECK(report["status"] == kExitSolver);
    CHECK(report["solve"]["converged"] == false);
    CHECK(report["solve"]["residual_trace"].size() >= 2);
  }
  SUBCASE("configuration rejected at run time is 2") {
    std::string errors;
    CHECK(run_text("bad_r0", torus_config("solve", 0.1, R"("r0": 0.3)"), scratch() / "bad_r0", nullptr, &errors) ==
          kExitConfig);
    CHECK(errors.find("r0") != std::string::npos);
  }
  SUBCASE("unwritable output is 4") {
    write_file("blocker", "x");
    CHECK(run_text("io", torus_config("solve", 0.1), scratch() / "blocker" / "out") == kExitIo);
  }
}

TEST_CASE("command-line binary") {
  auto exit_code = [](const std::string& args) {
    const std::string cmd = std::string(VORTEXGLUE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(exit_code("--version") == 0);
  CHECK(exit_code("--help") == 0);
  CHECK(exit_code("") == 2);
  CHECK(exit_code("--config " + (scratch() / "no_such.json").string()) == 2);
  CHECK(exit_code("--threads -1 --config x.json") == 2);
  const fs::path cfg = write_file("radial_bin.json", R"({"command": "radial", "radial": {"multiplicities": [1]}})");
  CHECK(exit_code("--config " + cfg.string() + " --out " + (scratch() / "bin_out").string() + " --cache " +
                  (scratch() / "cache").string() + " --threads 1 --seed 3") == 0);
  const auto meta = nlohmann::json::parse(read_file(scratch() / "bin_out" / "metadata.json"));
  CHECK(meta["threads"] == 1);
}
