// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vortexglue/app/run_config.hpp"
#include "vortexglue/app/runner.hpp"
#include "vortexglue/diagnostics.hpp"
#include "vortexglue/fit.hpp"
#include "vortexglue/gauge.hpp"
#include "vortexglue/partition.hpp"
#include "vortexglue/radial_profile.hpp"

namespace fs = std::filesystem;
using namespace vortexglue;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kFluxTol = 1e-3;
constexpr double kDecayLo = -1.05, kDecayHi = -0.90;
constexpr double kEigenStability = 0.10;
constexpr double kPartitionTol = 1e-10;
constexpr double kGradExpTol = 0.05, kHessExpTol = 0.1;
constexpr double kExpR2 = 0.98, kPowR2 = 0.95;
constexpr double kContractionMax = 0.5;
constexpr double kDistPower = 2.0, kDistPowerTol = 0.3;
constexpr double kPeriodicityTol = 1e-6;
constexpr double kRefineLo = 3.0, kRefineHi = 5.0;
constexpr double kEnergyTol = 0.01;
constexpr double kKrylovGrowth = 2.0;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

app::RunConfig load(const char* name) { return app::parse_config(fs::path(VORTEXGLUE_CONFIG_DIR) / name); }

std::shared_ptr<const RadialProfile> profile(int N) {
  static std::map<int, std::shared_ptr<const RadialProfile>> store;
  auto& p = store[N];
  if (!p) p = std::make_shared<const RadialProfile>(solve_radial_profile(N, 30.0, 1e-9));
  return p;
}

ProfileSet profiles_for(const VortexConfiguration& c) {
  ProfileSet set;
  for (const auto& v : c.vortices) set[v.multiplicity] = profile(v.multiplicity);
  return set;
}

void radial_flux() {
  double worst = 0.0;
  for (int N : {1, 2, 3}) {
    const double target = 4.0 * kPi * N;
    worst = std::max(worst, std::abs(profile_flux(*profile(N)) - target) / target);
  }
  report(1, "radial flux identity", worst <= kFluxTol, "max rel err " + fmt("%.2e", worst) + " (tol 1e-3)");
}

void radial_decay() {
  std::string detail;
  bool ok = true;
  for (int N : {1, 2}) {
    std::vector<double> r, y;
    for (int k = 0; k <= 100; ++k) {
      const double x = 10.0 + 0.1 * k;
      r.push_back(x);
      y.push_back(std::log(eval_profile(*profile(N), x).one_minus_exp_U));
    }
    const double slope = fit_line(r, y).slope;
    ok = ok && slope >= kDecayLo && slope <= kDecayHi;
    detail += "N=" + std::to_string(N) + " slope " + fmt("%.4f", slope) + "  ";
  }
  report(2, "radial decay rate", ok, detail + "(in [-1.05, -0.90])");
}

void nondegeneracy() {
  bool ok = true;
  std::string detail;
  for (int N : {1, 2, 3}) {
    double coarse = INFINITY, fine = INFINITY;
    for (const auto& m : check_nondegeneracy(*profile(N), 8, 30.0, 3000)) coarse = std::min(coarse, m.lambda_min);
    for (const auto& m : check_nondegeneracy(*profile(N), 8, 30.0, 6000)) fine = std::min(fine, m.lambda_min);
    const double change = std::abs(fine - coarse) / coarse;
    ok = ok && coarse > 0.0 && fine > 0.0 && change <= kEigenStability;
    detail += "N=" + std::to_string(N) + " " + fmt("%.4f", fine) + " (" + fmt("%.1e", change) + ")  ";
  }
  report(3, "nondegeneracy", ok, detail + "min lambda (rel change under doubling <= 10%)");
}

void partition_identities() {
  double worst = 0.0;
  const auto sweep = load("torus_two_vortex_sweep.json");
  const auto box = load("box_gauge.json");
  for (const VortexConfiguration* base : {&sweep.config, &box.config}) {
    VortexConfiguration c = *base;
    c.delta = 0.1;
    const auto P = PartitionOfUnity::build(c);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(0.0, c.domain.lx), uy(0.0, c.domain.ly);
    for (int n = 0; n < 10000; ++n) {
      const Vec2 x(ux(rng), uy(rng));
      const ActiveSet act = P.active_indices_physical(x);
      double s = 0.0, sq = 0.0;
      for (int j : act.vortices) {
        s += P.eval_physical(x, PartitionKind::Phi, j).value;
        sq += std::pow(P.eval_physical(x, PartitionKind::G, j).value, 2);
      }
      for (int k : act.cells) {
        s += P.eval_physical(x, PartitionKind::Psi, k).value;
        sq += std::pow(P.eval_physical(x, PartitionKind::H, k).value, 2);
      }
      worst = std::max({worst, std::abs(s - 1.0), std::abs(sq - 1.0)});
    }
  }
  std::vector<double> grad, hess;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, sweep.config.domain.lx), uy(0.0, sweep.config.domain.ly);
  std::vector<Vec2> pts;
  for (int n = 0; n < 4000; ++n) pts.emplace_back(ux(rng), uy(rng));
  for (double d : sweep.sweep.deltas) {
    VortexConfiguration c = sweep.config;
    c.delta = d;
    const auto P = PartitionOfUnity::build(c);
    double g = 0.0, h = 0.0;
    for (const Vec2& x : pts)
      for (int j = 0; j < P.vortex_count(); ++j) {
        const Jet jet = P.eval(x / d, PartitionKind::Phi, j, 2);
        g = std::max(g, jet.gradient.norm());
        h = std::max(h, jet.hessian.norm());
      }
    grad.push_back(g);
    hess.push_back(h);
  }
  const double eg = fit_power_law(sweep.sweep.deltas, grad).slope;
  const double eh = fit_power_law(sweep.sweep.deltas, hess).slope;
  const bool ok = worst <= kPartitionTol && std::abs(eg - 1.0) <= kGradExpTol && std::abs(eh - 2.0) <= kHessExpTol;
  report(4, "partition identities", ok,
         "max identity err " + fmt("%.1e", worst) + ", exponents " + fmt("%.4f", eg) + " / " + fmt("%.4f", eh));
}

struct SweepEntry {
  SweepRecord record;
  double flux_number = 0.0;
};

std::vector<SweepEntry> torus_sweep(const app::RunConfig& rc) {
  std::vector<SweepEntry> out;
  const ProfileSet set = profiles_for(rc.config);
  for (double d : rc.sweep.deltas) {
    VortexConfiguration c = rc.config;
    c.delta = d;
    const Solution sol = solve(c, rc.solver, set);
    SweepEntry e;
    e.record = sweep_record(sol, default_test_function(c, 0), true);
    e.flux_number = flux_number(reconstruct(sol));
    out.push_back(e);
  }
  return out;
}

void sweep_criteria(const std::vector<SweepEntry>& entries, const std::vector<double>& other_flux) {
  std::vector<SweepRecord> recs;
  for (const auto& e : entries) recs.push_back(e.record);
  const SweepFits fits = fit_sweep(recs);

  report(5, "residual-at-zero law", fits.residual_law.slope < 0.0 && fits.residual_law.r_squared >= kExpR2,
         "slope " + fmt("%.4f", fits.residual_law.slope) + ", R^2 " + fmt("%.4f", fits.residual_law.r_squared));

  double contraction = 0.0;
  for (const auto& r : recs) contraction = std::max(contraction, r.contraction);
  report(6, "fixed point and error law",
         contraction <= kContractionMax && fits.z_law.slope < 0.0 && fits.z_law.r_squared >= kExpR2,
         "max contraction " + fmt("%.3f", contraction) + ", sup|z| slope " + fmt("%.4f", fits.z_law.slope) +
             ", R^2 " + fmt("%.4f", fits.z_law.r_squared));

  bool tracks = true;
  double margin = INFINITY;
  for (const auto& r : recs) {
    const double gap = std::abs(r.omega_sup - r.z_sup);
    tracks = tracks && gap <= r.cutoff_bound;
    margin = std::min(margin, r.cutoff_bound / std::max(gap, 1e-300));
  }
  report(7, "superposition rule", tracks,
         "|sup omega - sup z| <= cutoff bound at every delta (min bound/gap " + fmt("%.3g", margin) + ")");

  double flux = 0.0, quant = 0.0;
  for (const auto& e : entries) {
    flux = std::max(flux, e.record.flux_error);
    quant = std::max(quant, std::abs(e.flux_number - std::round(e.flux_number)));
  }
  for (double f : other_flux) flux = std::max(flux, f);
  report(8, "flux quantization", flux <= kFluxTol && quant <= kFluxTol,
         "max rel flux err " + fmt("%.2e", flux) + " over " + std::to_string(entries.size() + other_flux.size()) +
             " torus solves, max |N - round N| " + fmt("%.2e", quant));

  report(9, "distributional limit rate",
         std::abs(fits.distributional.slope - kDistPower) <= kDistPowerTol && fits.distributional.r_squared >= kPowR2,
         "power " + fmt("%.4f", fits.distributional.slope) + ", R^2 " + fmt("%.4f", fits.distributional.r_squared) +
             " (2 +- 0.3)");

}

void krylov_counts(const std::vector<SweepEntry>& entries) {
  std::vector<SweepRecord> recs;
  for (const auto& e : entries) recs.push_back(e.record);
  const int first = recs.front().krylov_preconditioned;
  int worst = 0;
  for (const auto& r : recs) worst = std::max(worst, r.krylov_preconditioned);
  const bool bounded = worst <= kKrylovGrowth * first;
  const bool helps = recs.back().krylov_plain > recs.back().krylov_preconditioned;
  std::string counts;
  for (const auto& r : recs)
    counts += (counts.empty() ? "" : " ") + std::to_string(r.krylov_preconditioned) + "/" + std::to_string(r.krylov_plain);
  report(12, "preconditioner effectiveness", bounded && helps, "S/plain counts " + counts);
}

// Solves both configurations; returns the mismatch and records their flux errors.
double periodicity_solves(std::vector<double>& flux) {
  const auto cell = load("periodicity_cell.json");
  const auto super = load("periodicity_supercell.json");
  const Solution sc = solve(cell.config, cell.solver, profiles_for(cell.config));
  const Solution ss = solve(super.config, super.solver, profiles_for(super.config));
  flux.push_back(flux_error(sc));
  flux.push_back(flux_error(ss));
  return periodicity_check(sc, ss);
}

void bogomolny() {
  auto rc = load("box_gauge.json");
  std::vector<BogomolnyResidual> res;
  std::vector<double> energies;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    rc.solver.h = h;
    const Solution sol = solve(rc.config, rc.solver, profiles_for(rc.config));
    const GaugePair pair = reconstruct(sol, rc.gauge.sign);
    res.push_back(bogomolny_residual(pair, sol.delta()));
    const EnergyReport en = energy(pair, sol);
    energies.push_back(en.total / en.target);
  }
  const double q1 = res[0].r1 / res[1].r1, q2 = res[0].r2 / res[1].r2;
  bool ok = q1 >= kRefineLo && q1 <= kRefineHi && q2 >= kRefineLo && q2 <= kRefineHi;
  for (double e : energies) ok = ok && std::abs(e - 1.0) <= kEnergyTol;
  report(11, "Bogomolny consistency", ok,
         "r1 ratio " + fmt("%.3f", q1) + ", r2 ratio " + fmt("%.3f", q2) + ", E/(2 pi N) " + fmt("%.5f", energies[0]) +
             " / " + fmt("%.5f", energies[1]));
}

void area_obstruction() {
  auto rc = load("area_obstruction.json");
  rc.output = fs::temp_directory_path() / "vortexglue_acceptance_obstruction";
  rc.cache.clear();
  fs::remove_all(rc.output);
  std::ostringstream out, err;
  const int code = app::run(rc, out, err);
  double last = 0.0;
  std::ifstream in(rc.output / "report.json");
  if (in) {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("solve") && !j["solve"]["residual_trace"].empty())
      last = j["solve"]["residual_trace"].back().get<double>();
  }
  const bool ok = code == app::kExitSolver && last > rc.solver.tol;
  report(13, "area obstruction", ok,
         "4 pi delta^2 N / |Omega| = " + fmt("%.3f", 4 * kPi * rc.config.delta * rc.config.delta / rc.config.domain.area()) +
             ", exit " + std::to_string(code) + ", last residual " + fmt("%.3e", last));
}

}  // namespace

int main() {
  radial_flux();
  radial_decay();
  nondegeneracy();
  partition_identities();
  const auto entries = torus_sweep(load("torus_two_vortex_sweep.json"));
  std::vector<double> other_flux;
  const double mismatch = periodicity_solves(other_flux);
  sweep_criteria(entries, other_flux);
  report(10, "periodicity", mismatch <= kPeriodicityTol, "supercell mismatch " + fmt("%.2e", mismatch) + " (tol 1e-6)");
  bogomolny();
  krylov_counts(entries);
  area_obstruction();
  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
