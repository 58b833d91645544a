#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vortexglue/ansatz.hpp"
#include "vortexglue/approximate_inverse.hpp"
#include "vortexglue/field_grid.hpp"

namespace vortexglue {

enum class Strategy {
  Frozen,  // linearisation about z = 0 reused every step
  Newton,  // relinearised at each iterate
};

struct SolverOptions {
  double tol = 1e-8;          // on ||F(z)||_Y
  int max_iter = 50;
  Strategy strategy = Strategy::Frozen;
  bool use_preconditioner = true;
  double h = 1.0 / 16.0;      // rescaled grid spacing
  double linear_tol = 1e-9;   // relative Krylov residual
  int krylov_max_iter = 20000;
  int divergence_window = 3;  // consecutive residual increases that count as divergence
};

struct SolveReport {
  bool converged = false;
  std::string failure;  // empty on success
  Strategy strategy = Strategy::Frozen;
  bool preconditioned = true;
  double delta = 0.0;
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  int iterations = 0;
  std::vector<double> residual_trace;  // ||F(z_k)||_Y, starting at k = 0
  std::vector<double> step_trace;      // ||z_{k+1} - z_k||_X
  std::vector<int> krylov_iterations;  // per linear solve
  double residual_at_zero = 0.0;       // ||F(0)||_Y
  double contraction = 0.0;            // largest ratio of successive steps
  double ball_radius = 0.0;            // 2 ||L^{-1} F(0)||_X
  double z_norm_X = 0.0;
  double z_sup = 0.0;
  double final_residual = 0.0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;

  /// Deterministic JSON: timings are left out.
  std::string to_json() const;
  std::string timings_json() const;
};

/// Nonlinear solve failure; carries the trace up to the point of failure.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

/// F(z) = -Delta z + F(0) + W (e^z - 1).
ScalarField residual_F(const AnsatzBackground& background, const ScalarField& z);
/// L v = -Delta v + W v.
ScalarField apply_L(const AnsatzBackground& background, const ScalarField& v);

struct LinearSolveResult {
  ScalarField solution;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Krylov solve of (-Delta + potential) v = rhs, preconditioned by S when
/// `inverse` is non-null.
LinearSolveResult solve_linear(const ScalarField& potential, const ApproximateInverse* inverse,
                               const ScalarField& rhs, double rtol, int max_iter);

struct FixedPointResult {
  ScalarField z;
  SolveReport report;
};

/// Iterates z <- z - L^{-1} F(z). Throws SolverFailure on divergence, stall,
/// non-finite values or when max_iter is reached.
FixedPointResult run_fixed_point(const AnsatzBackground& background,
                                 const ApproximateInverse& inverse, const SolverOptions& options);

/// Converged solution u = b + z on the rescaled grid.
struct Solution {
  std::shared_ptr<const AnsatzBackground> background;
  ScalarField z;
  SolveReport report;

  const GridGeometry& geometry() const { return background->geometry(); }
  double delta() const { return background->config().delta; }
  /// u at every node; -infinity at vortex nodes.
  ScalarField u() const;
  ScalarField exp_u() const;
  /// u minus the logarithmic part: smooth and finite everywhere.
  ScalarField u_smooth() const;
};

Solution solve(const VortexConfiguration& config, const SolverOptions& options,
               const ProfileSet& profiles);

const char* strategy_name(Strategy s);

}  // namespace vortexglue
