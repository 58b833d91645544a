#pragma once

#include <filesystem>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vortexglue/fit.hpp"
#include "vortexglue/glue_solver.hpp"

namespace vortexglue {

/// omega = u - sum over vortices and periodic images of U(|x - p|), images
/// summed until |U| drops below `image_cutoff`.
struct SuperpositionError {
  ScalarField omega;  // -infinity entries never occur; vortex nodes carry z there
  double sup = 0.0;
};
SuperpositionError superposition_error(const Solution& solution, double image_cutoff = 1e-14);

/// Bound on sup |z - omega| implied by truncating each profile at its patch:
/// sum_j |U_j(rho_j / delta)| plus the profile tails of the nearest images.
double superposition_cutoff_bound(const Solution& solution);

struct AsymptoticsAudit {
  double sup_on_K = 0.0;  // sup (1 - e^u) on K = Omega minus disks of radius max(d/4, 4 delta)
  double max_u = 0.0;     // largest finite u over the grid
  double excluded_radius = 0.0;
};
AsymptoticsAudit asymptotics_audit(const Solution& solution);

/// Smooth test function in physical coordinates.
using TestFunction = std::function<double(const Vec2&)>;

/// psi(x) = (1 - r^2/4) near p, cut off smoothly between `inner` and `outer`.
/// Its Laplacian is constant on the vortex core, so the moment expansion of
/// the distributional error stops at the second moment.
TestFunction vortex_bump(const Domain& domain, const Vec2& p, double inner, double outer);
/// Compact C^3 bump centred at c with radius R.
TestFunction plain_bump(const Domain& domain, const Vec2& c, double radius);
TestFunction constant_function(double value);

/// |delta^{-2} integral (1 - e^u) psi - 4 pi sum m_j psi(p_j)|.
double distributional_error(const Solution& solution, const TestFunction& psi);

/// max over shared nodes of |u(x + shift) - u(x)| comparing a unit-cell solve
/// with its supercell solve (both rescaled grids, same spacing).
double periodicity_check(const Solution& cell, const Solution& supercell);

struct SweepRecord {
  double delta = 0.0;
  double z_sup = 0.0;
  double residual_at_zero = 0.0;
  double omega_sup = 0.0;
  double cutoff_bound = 0.0;
  double distributional = 0.0;
  double contraction = 0.0;
  int iterations = 0;
  int krylov_preconditioned = 0;
  int krylov_plain = 0;
  double flux_error = 0.0;
};

struct SweepFits {
  LinearFit z_law;          // ln sup|z| vs 1/delta
  LinearFit residual_law;   // ln ||F(0)||_Y vs 1/delta
  LinearFit omega_law;      // ln sup|omega| vs 1/delta
  LinearFit distributional; // ln E vs ln delta
};

/// Vortex bump about vortex j with radii 0.35 d and 0.6 d, d the minimum
/// separation (twice the wall distance for a lone vortex in a box).
TestFunction default_test_function(const VortexConfiguration& config, int vortex);

/// |delta^{-2} integral (1 - e^u) - 4 pi sum m| / (4 pi sum m).
double flux_error(const Solution& solution);

/// Everything a sweep row needs from one converged solve. The plain Krylov
/// count solves L v = F(0) without preconditioning.
SweepRecord sweep_record(const Solution& solution, const TestFunction& psi, bool measure_plain);

struct SweepSettings {
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  SolverOptions solver;
  TestFunction test_function;  // empty selects default_test_function(config, 0)
  bool measure_plain = true;
};

/// Independent solves, one per delta, run through parallel_for. A failed
/// solve propagates its SolverFailure.
std::vector<SweepRecord> run_sweep(const VortexConfiguration& base, const SweepSettings& settings,
                                   const ProfileSet& profiles);

/// Random combination of the lowest `modes` Fourier (torus) or sine (box)
/// modes of the domain, amplitudes decaying like 1 / (1 + |k|^2).
ScalarField random_smooth_field(const GridGeometry& geometry, std::mt19937_64& rng, int modes = 4);

struct OperatorAudit {
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  int samples = 0;
};

/// ||S L v - v||_X / ||v||_X over random smooth v.
OperatorAudit inverse_defect_audit(const AnsatzBackground& background, const ApproximateInverse& inverse,
                                   int samples, std::uint64_t seed, int modes = 4);

/// sup|v| / ||v||_X over random smooth v.
OperatorAudit embedding_audit(const SampledPartition& partition, int samples, std::uint64_t seed,
                              int modes = 4);

SweepFits fit_sweep(const std::vector<SweepRecord>& records);

/// sweep.csv, fits.json and one gnuplot .dat file per law.
void write_sweep(const std::vector<SweepRecord>& records, const SweepFits& fits,
                 const std::filesystem::path& directory);

std::string fit_json(const LinearFit& fit);

}  // namespace vortexglue
