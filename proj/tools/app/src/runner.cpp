#include "vortexglue/app/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>

#include <json.hpp>

#include "vortexglue/app/profile_cache.hpp"
#include "vortexglue/approximate_inverse.hpp"
#include "vortexglue/diagnostics.hpp"
#include "vortexglue/errors.hpp"
#include "vortexglue/field_io.hpp"
#include "vortexglue/fit.hpp"
#include "vortexglue/gauge.hpp"
#include "vortexglue/glue_solver.hpp"
#include "vortexglue/parallel.hpp"

#ifndef VORTEXGLUE_VERSION
#define VORTEXGLUE_VERSION "unknown"
#endif

namespace vortexglue::app {
namespace {

using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string line(const char* label, const std::string& value) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %-34s %s\n", label, value.c_str());
  return buf;
}

std::string num(double x, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream o(path);
  if (!o) throw IoError("cannot write " + path.string());
  o << text;
  if (!text.empty() && text.back() != '\n') o << '\n';
  if (!o) throw IoError("cannot write " + path.string());
}

ojson report_json(const SolveReport& rep) { return ojson::parse(rep.to_json()); }

ojson fit_to_json(const LinearFit& fit) { return ojson::parse(fit_json(fit)); }

struct Context {
  const RunConfig& rc;
  std::ostream& out;
  ProfileCache cache;
  ojson report;
  ojson timings;
  Clock::time_point start = Clock::now();

  Context(const RunConfig& c, std::ostream& o) : rc(c), out(o), cache(c.cache) {}

  ProfileSet profiles() {
    const auto t0 = Clock::now();
    ProfileSet set = cache.profiles_for(rc.config, rc.profile.r_max, rc.profile.tol);
    timings["profiles_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
    return set;
  }

  Solution solve_once(const VortexConfiguration& config, const ProfileSet& set) {
    try {
      Solution sol = solve(config, rc.solver, set);
      timings["setup_seconds"] = sol.report.setup_seconds;
      timings["solve_seconds"] = sol.report.solve_seconds;
      return sol;
    } catch (const SolverFailure& f) {
      report["solve"] = report_json(f.report());
      throw;
    }
  }
};

double radial_decay_slope(const RadialProfile& prof, double r0, double r1) {
  std::vector<double> r, y;
  for (int k = 0; k <= 100; ++k) {
    const double x = r0 + (r1 - r0) * k / 100.0;
    const double gap = eval_profile(prof, x).one_minus_exp_U;
    if (gap > 0.0) {
      r.push_back(x);
      y.push_back(std::log(gap));
    }
  }
  return fit_line(r, y).slope;
}

void run_radial(Context& ctx) {
  std::vector<int> list = ctx.rc.radial.multiplicities;
  if (list.empty()) {
    if (ctx.rc.has_vortices) {
      std::set<int> ms;
      for (const auto& v : ctx.rc.config.vortices) ms.insert(v.multiplicity);
      list.assign(ms.begin(), ms.end());
    } else {
      list = {1, 2, 3};
    }
  }
  const auto dir = ctx.rc.output / "radial";
  std::filesystem::create_directories(dir);
  ojson entries = ojson::array();
  ctx.out << "radial profiles (r_max " << ctx.rc.profile.r_max << ", tol " << ctx.rc.profile.tol << ")\n";
  ctx.out << "  N   w(0)              flux/(4 pi N)-1   slope[10,20]   min eigenvalue (l<=" << ctx.rc.radial.l_max
          << ")\n";
  for (int N : list) {
    const auto prof = ctx.cache.get(N, ctx.rc.profile.r_max, ctx.rc.profile.tol);
    const auto modes = ctx.cache.modes(*prof, ctx.rc.profile.tol, ctx.rc.radial.l_max, ctx.rc.radial.grid_points);
    save_profile(*prof, dir / ("profile_N" + std::to_string(N) + ".csv"),
                 dir / ("profile_N" + std::to_string(N) + ".json"));
    const double flux = profile_flux(*prof);
    const double target = 4.0 * std::numbers::pi * N;
    const double slope = N > 0 ? radial_decay_slope(*prof, 10.0, 20.0) : 0.0;
    double lambda_min = INFINITY;
    ojson m = ojson::array();
    for (const auto& e : modes) {
      m.push_back({{"l", e.l}, {"lambda_min", e.lambda_min}});
      lambda_min = std::min(lambda_min, e.lambda_min);
    }
    ojson e;
    e["N"] = N;
    e["w0"] = prof->w.front();
    e["flux"] = flux;
    e["flux_relative_error"] = N > 0 ? (flux - target) / target : flux;
    e["decay_slope_10_20"] = slope;
    e["decay_alpha"] = prof->decay_alpha;
    e["decay_C"] = prof->decay_C;
    e["tail_amplitude"] = prof->tail_amplitude;
    e["max_residual"] = prof->max_residual;
    e["newton_iterations"] = prof->newton_iterations;
    e["modes"] = m;
    entries.push_back(e);
    ctx.out << "  " << N << "   " << num(prof->w.front(), "%-16.12f") << "  "
            << num(N > 0 ? (flux - target) / target : flux, "%-+16.3e") << "  " << num(slope, "%-13.4f") << "  "
            << num(lambda_min, "%.6f") << '\n';
  }
  ctx.report["profiles"] = entries;
}

ojson flux_json(const Solution& sol, std::ostream& out) {
  const double target = 4.0 * std::numbers::pi * sol.background->config().total_multiplicity();
  const double err = flux_error(sol);
  const double integral = integrate([&] {
    ScalarField g = sol.exp_u();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = 1.0 - g[k];
    return g;
  }());
  out << line("flux delta^-2 int(1 - e^u):", num(integral, "%.10g") + "  (4 pi sum m = " + num(target, "%.10g") +
                                                  ", rel. error " + num(err, "%.3e") + ")");
  return {{"integral", integral}, {"target", target}, {"relative_error", err}};
}

void summary_solve(std::ostream& out, const SolveReport& rep) {
  out << line("grid:", std::to_string(rep.nx) + " x " + std::to_string(rep.ny) + ", h = " + num(rep.h));
  out << line("strategy:", std::string(strategy_name(rep.strategy)) +
                               (rep.preconditioned ? ", preconditioned" : ", unpreconditioned"));
  out << line("iterations:", std::to_string(rep.iterations));
  out << line("||F(0)||_Y:", num(rep.residual_at_zero, "%.4e"));
  out << line("final ||F(z)||_Y:", num(rep.final_residual, "%.4e"));
  out << line("sup |z|:", num(rep.z_sup, "%.4e"));
  out << line("contraction:", num(rep.contraction, "%.4f"));
  std::string kry;
  for (std::size_t k = 0; k < rep.krylov_iterations.size() && k < 12; ++k)
    kry += std::to_string(rep.krylov_iterations[k]) + " ";
  if (rep.krylov_iterations.size() > 12) kry += "...";
  out << line("Krylov iterations per step:", kry);
}

void write_solution_fields(const Solution& sol, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_field_snapshot(sol.u(), dir / "u", Frame::Physical, "u");
  write_field_snapshot(sol.exp_u(), dir / "exp_u", Frame::Physical, "exp_u");
  write_field_snapshot(sol.z, dir / "z", Frame::Rescaled, "z");
  const GridGeometry& g = sol.geometry();
  const Vec2 p = sol.background->center(0);
  int row = static_cast<int>(std::lround(g.boundary == Boundary::Periodic ? p.y() / g.h : p.y() / g.h - 1.0));
  row = std::clamp(row, 0, g.ny - 1);
  write_field_row_csv(sol.u_smooth(), row, dir / "u_smooth_row.csv", Frame::Physical);
}

void run_solve(Context& ctx) {
  const ProfileSet set = ctx.profiles();
  const Solution sol = ctx.solve_once(ctx.rc.config, set);
  write_solution_fields(sol, ctx.rc.output / "fields");
  ctx.report["solve"] = report_json(sol.report);
  ctx.report["partition"] = ojson::parse(sol.background->partition().summary_json());
  ctx.out << "solve (delta " << sol.delta() << ")\n";
  summary_solve(ctx.out, sol.report);
  ctx.report["flux"] = flux_json(sol, ctx.out);
}

TestFunction sweep_test_function(const RunConfig& rc) {
  if (!rc.sweep.test_function) return default_test_function(rc.config, 0);
  const auto& t = *rc.sweep.test_function;
  return vortex_bump(rc.config.domain, rc.config.vortices[t.vortex].position, t.inner, t.outer);
}

void run_sweep_command(Context& ctx) {
  const ProfileSet set = ctx.profiles();
  SweepSettings settings;
  settings.deltas = ctx.rc.sweep.deltas;
  settings.solver = ctx.rc.solver;
  settings.test_function = sweep_test_function(ctx.rc);
  settings.measure_plain = ctx.rc.sweep.measure_plain;
  const auto t0 = Clock::now();
  std::vector<SweepRecord> records;
  try {
    records = run_sweep(ctx.rc.config, settings, set);
  } catch (const SolverFailure& f) {
    ctx.report["failed_solve"] = report_json(f.report());
    throw;
  }
  ctx.timings["sweep_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  const SweepFits fits = fit_sweep(records);
  write_sweep(records, fits, ctx.rc.output);
  ojson rows = ojson::array();
  ctx.out << "sweep\n    delta     ||F(0)||_Y   sup|z|       sup|omega|   E(delta)     flux err   Krylov S/plain\n";
  for (const auto& r : records) {
    rows.push_back({{"delta", r.delta},
                    {"z_sup", r.z_sup},
                    {"residual_at_zero", r.residual_at_zero},
                    {"omega_sup", r.omega_sup},
                    {"cutoff_bound", r.cutoff_bound},
                    {"distributional", r.distributional},
                    {"contraction", r.contraction},
                    {"iterations", r.iterations},
                    {"krylov_preconditioned", r.krylov_preconditioned},
                    {"krylov_plain", r.krylov_plain},
                    {"flux_error", r.flux_error}});
    char buf[200];
    std::snprintf(buf, sizeof buf, "  %7.4f   %.4e   %.4e   %.4e   %.4e   %.2e   %d/%d\n", r.delta,
                  r.residual_at_zero, r.z_sup, r.omega_sup, r.distributional, r.flux_error, r.krylov_preconditioned,
                  r.krylov_plain);
    ctx.out << buf;
  }
  ctx.report["records"] = rows;
  ctx.report["fits"] = {{"residual_at_zero", fit_to_json(fits.residual_law)},
                        {"z_sup", fit_to_json(fits.z_law)},
                        {"omega_sup", fit_to_json(fits.omega_law)},
                        {"distributional", fit_to_json(fits.distributional)}};
  ctx.out << line("fit ln||F(0)|| vs 1/delta:", "slope " + num(fits.residual_law.slope, "%.4f") + ", R^2 " +
                                                     num(fits.residual_law.r_squared, "%.4f"));
  ctx.out << line("fit ln sup|z| vs 1/delta:",
                  "slope " + num(fits.z_law.slope, "%.4f") + ", R^2 " + num(fits.z_law.r_squared, "%.4f"));
  ctx.out << line("fit ln sup|omega| vs 1/delta:",
                  "slope " + num(fits.omega_law.slope, "%.4f") + ", R^2 " + num(fits.omega_law.r_squared, "%.4f"));
  ctx.out << line("fit ln E vs ln delta:", "slope " + num(fits.distributional.slope, "%.4f") + ", R^2 " +
                                                num(fits.distributional.r_squared, "%.4f"));
}

void run_gauge(Context& ctx) {
  const ProfileSet set = ctx.profiles();
  const Solution sol = ctx.solve_once(ctx.rc.config, set);
  const GaugePair pair = reconstruct(sol, ctx.rc.gauge.sign);
  const BogomolnyResidual bog = bogomolny_residual(pair, sol.delta());
  const EnergyReport en = energy(pair, sol);
  const double flux = flux_number(pair);
  const GridGeometry& g = sol.geometry();
  ojson windings = ojson::array();
  for (int v = 0; v < static_cast<int>(sol.background->config().vortices.size()); ++v) {
    const Vec2 p = sol.background->center(v);
    const int off = g.boundary == Boundary::Periodic ? 0 : 1;
    const int i = static_cast<int>(std::lround(p.x() / g.h)) - off;
    const int j = static_cast<int>(std::lround(p.y() / g.h)) - off;
    windings.push_back(winding_number(sol, i, j, 4, ctx.rc.gauge.sign));
  }
  const auto dir = ctx.rc.output / "fields";
  std::filesystem::create_directories(dir);
  write_field_snapshot(pair.modulus_squared(), dir / "higgs_modulus_squared", Frame::Physical, "|phi|^2");
  ScalarField f12 = pair.f12;
  f12 *= 1.0 / (sol.delta() * sol.delta());
  write_field_snapshot(f12, dir / "f12", Frame::Physical, "F12");
  write_field_snapshot(en.density, dir / "energy_density", Frame::Physical, "energy_density");

  ctx.report["solve"] = report_json(sol.report);
  ojson gj;
  gj["sign"] = ctx.rc.gauge.sign == VortexSign::Upper ? "upper" : "lower";
  gj["bogomolny_r1"] = bog.r1;
  gj["bogomolny_r2"] = bog.r2;
  gj["energy"] = en.total;
  gj["energy_target"] = en.target;
  gj["flux_number"] = flux;
  gj["winding_numbers"] = windings;
  ctx.out << "gauge reconstruction (delta " << sol.delta() << ")\n";
  summary_solve(ctx.out, sol.report);
  ctx.out << line("Bogomolny residuals r1, r2:", num(bog.r1, "%.4e") + ", " + num(bog.r2, "%.4e"));
  ctx.out << line("energy / (2 pi sum m):", num(en.total / en.target, "%.8f"));
  ctx.out << line("(2 pi)^-1 int F12:", num(flux, "%.8f"));
  if (sol.background->config().vortices.size() == 1) {
    const DecayAudit audit = field_decay_audit(pair, sol, ctx.rc.gauge.fit_r_min, ctx.rc.gauge.fit_r_max);
    gj["decay"] = {{"fitted_rate", audit.fitted_rate},
                   {"fit_r_squared", audit.fit_r_squared},
                   {"fit_window", {audit.fit_r_min, audit.fit_r_max}},
                   {"max_ratio", audit.max_ratio}};
    ctx.out << line("decay rate of ln(1 - |phi|^2):", num(audit.fitted_rate, "%.4f"));
    ctx.out << line("max |D phi| / (1 - |phi|^2):", num(audit.max_ratio, "%.4f"));
  }
  ctx.report["gauge"] = gj;
  ctx.report["flux"] = flux_json(sol, ctx.out);
}

void run_audit(Context& ctx) {
  const ProfileSet set = ctx.profiles();
  const Solution sol = ctx.solve_once(ctx.rc.config, set);
  const auto omega = superposition_error(sol);
  const double bound = superposition_cutoff_bound(sol);
  ScalarField diff = sol.z;
  diff -= omega.omega;
  const AsymptoticsAudit asym = asymptotics_audit(sol);
  const double dist = distributional_error(sol, sweep_test_function(ctx.rc));
  const ApproximateInverse inverse(sol.background);
  const OperatorAudit s_audit =
      inverse_defect_audit(*sol.background, inverse, ctx.rc.audit.samples, ctx.rc.seed, ctx.rc.audit.modes);
  const OperatorAudit embed =
      embedding_audit(sol.background->sampled(), ctx.rc.audit.samples, ctx.rc.seed + 1, ctx.rc.audit.modes);
  ctx.report["solve"] = report_json(sol.report);
  ctx.report["audit"] = {{"omega_sup", omega.sup},
                         {"z_minus_omega_sup", sup_norm(diff)},
                         {"cutoff_bound", bound},
                         {"sup_on_K", asym.sup_on_K},
                         {"excluded_radius", asym.excluded_radius},
                         {"max_u", asym.max_u},
                         {"exp_u_below_one", asym.max_u < 0.0},
                         {"distributional_error", dist},
                         {"inverse_defect_max", s_audit.max_ratio},
                         {"inverse_defect_mean", s_audit.mean_ratio},
                         {"embedding_constant", embed.max_ratio},
                         {"samples", s_audit.samples},
                         {"seed", ctx.rc.seed}};
  ctx.out << "audit (delta " << sol.delta() << ")\n";
  summary_solve(ctx.out, sol.report);
  ctx.out << line("sup |omega|:", num(omega.sup, "%.4e"));
  ctx.out << line("sup |z - omega| (bound):", num(sup_norm(diff), "%.4e") + " (" + num(bound, "%.4e") + ")");
  ctx.out << line("sup_K (1 - e^u):", num(asym.sup_on_K, "%.4e"));
  ctx.out << line("max u (must be < 0):", num(asym.max_u, "%.4e"));
  ctx.out << line("distributional error E:", num(dist, "%.4e"));
  ctx.out << line("||S L v - v||_X / ||v||_X (max):", num(s_audit.max_ratio, "%.4f"));
  ctx.out << line("sup|v| / ||v||_X (max):", num(embed.max_ratio, "%.4f"));
  ctx.report["flux"] = flux_json(sol, ctx.out);
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_outputs(Context& ctx, int status, const std::string& error) {
  ctx.report["command"] = command_name(ctx.rc.command);
  ctx.report["status"] = status;
  if (!error.empty()) ctx.report["error"] = error;
  write_text(ctx.rc.output / "report.json", ctx.report.dump(2));
  ojson meta;
  meta["version"] = VORTEXGLUE_VERSION;
  meta["timestamp"] = timestamp();
  meta["threads"] = thread_count();
  meta["output"] = ctx.rc.output.string();
  meta["cache"] = ctx.rc.cache.string();
  const auto stats = ctx.cache.stats();
  meta["cache_hits"] = stats.hits;
  meta["cache_misses"] = stats.misses;
  ctx.timings["total_seconds"] = std::chrono::duration<double>(Clock::now() - ctx.start).count();
  meta["timings"] = ctx.timings;
  write_text(ctx.rc.output / "metadata.json", meta.dump(2));
}

}  // namespace

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.output) config.output = *o.output;
  if (o.cache) config.cache = *o.cache;
  if (o.threads) config.threads = *o.threads;
  if (o.seed) config.seed = *o.seed;
  if (o.no_preconditioner) config.solver.use_preconditioner = false;
}

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (rc.threads > 0) set_thread_count(rc.threads);
  std::unique_ptr<Context> ctx;
  try {
    std::filesystem::create_directories(rc.output);
    ctx = std::make_unique<Context>(rc, out);
    write_text(rc.output / "config.json", config_to_json(rc));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  int status = kExitOk;
  std::string message;
  try {
    if (rc.has_vortices && !rc.config.satisfies_area_bound())
      out << "warning: 4 pi delta^2 sum m >= |Omega|; no solution exists for this configuration\n";
    switch (rc.command) {
      case Command::Radial: run_radial(*ctx); break;
      case Command::Solve: run_solve(*ctx); break;
      case Command::Sweep: run_sweep_command(*ctx); break;
      case Command::Gauge: run_gauge(*ctx); break;
      case Command::Audit: run_audit(*ctx); break;
    }
  } catch (const ConfigError& e) {
    status = kExitConfig;
    message = e.what();
  } catch (const SolverFailure& e) {
    status = kExitSolver;
    message = e.what();
    out << "solver failed: " << e.what() << '\n';
    summary_solve(out, e.report());
  } catch (const ConvergenceError& e) {
    status = kExitSolver;
    message = e.what();
  } catch (const IoError& e) {
    status = kExitIo;
    message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    status = kExitIo;
    message = e.what();
  } catch (const std::exception& e) {
    status = kExitInternal;
    message = e.what();
  }
  if (!message.empty()) err << "error: " << message << '\n';
  try {
    write_outputs(*ctx, status, message);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    if (status == kExitOk) status = kExitIo;
  }
  return status;
}

int run_file(const std::filesystem::path& path, const Overrides& overrides, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = parse_config(path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  apply_overrides(rc, overrides);
  return run(rc, out, err);
}

}  // namespace vortexglue::app
