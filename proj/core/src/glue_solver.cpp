#include "vortexglue/glue_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "vortexglue/krylov.hpp"

namespace vortexglue {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

const char* strategy_name(Strategy s) { return s == Strategy::Newton ? "newton" : "frozen"; }

std::string SolveReport::to_json() const {
  nlohmann::ordered_json j;
  j["converged"] = converged;
  j["failure"] = failure;
  j["strategy"] = strategy_name(strategy);
  j["preconditioned"] = preconditioned;
  j["delta"] = delta;
  j["grid"] = {nx, ny};
  j["h"] = h;
  j["iterations"] = iterations;
  j["residual_at_zero"] = residual_at_zero;
  j["final_residual"] = final_residual;
  j["residual_trace"] = residual_trace;
  j["step_trace"] = step_trace;
  j["contraction"] = contraction;
  j["ball_radius"] = ball_radius;
  j["z_norm_X"] = z_norm_X;
  j["z_sup"] = z_sup;
  j["krylov_iterations"] = krylov_iterations;
  return j.dump(2);
}

std::string SolveReport::timings_json() const {
  nlohmann::ordered_json j;
  j["setup_seconds"] = setup_seconds;
  j["solve_seconds"] = solve_seconds;
  return j.dump(2);
}

ScalarField residual_F(const AnsatzBackground& bg, const ScalarField& z) {
  const ScalarField& W = bg.weight();
  const ScalarField& F0 = bg.residual_at_zero();
  ScalarField out(z.geometry());
  apply_schrodinger(z.geometry(), {}, z.values(), out.values());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += F0[k] + W[k] * std::expm1(z[k]);
  return out;
}

ScalarField apply_L(const AnsatzBackground& bg, const ScalarField& v) {
  ScalarField out(v.geometry());
  apply_schrodinger(v.geometry(), bg.weight().values(), v.values(), out.values());
  return out;
}

LinearSolveResult solve_linear(const ScalarField& potential, const ApproximateInverse* inverse,
                               const ScalarField& rhs, double rtol, int max_iter) {
  const GridGeometry& g = rhs.geometry();
  LinearSolveResult result;
  result.solution = ScalarField(g);
  const auto op = [&](std::span<const double> in, std::span<double> out) {
    apply_schrodinger(g, potential.values(), in, out);
  };
  KrylovResult kr;
  if (inverse) {
    const auto pre = [&](std::span<const double> in, std::span<double> out) { inverse->apply(in, out); };
    kr = flexible_pcg(op, pre, rhs.values(), result.solution.values(), rtol, max_iter);
  } else {
    const auto identity = [](std::span<const double> in, std::span<double> out) {
      std::copy(in.begin(), in.end(), out.begin());
    };
    kr = flexible_pcg(op, identity, rhs.values(), result.solution.values(), rtol, max_iter);
  }
  result.iterations = kr.iterations;
  result.relative_residual = kr.relative_residual;
  result.converged = kr.converged;
  return result;
}

FixedPointResult run_fixed_point(const AnsatzBackground& bg, const ApproximateInverse& inverse,
                                 const SolverOptions& opt) {
  const auto t0 = Clock::now();
  const GridGeometry& g = bg.geometry();
  const SampledPartition& sp = bg.sampled();
  SolveReport rep;
  rep.strategy = opt.strategy;
  rep.preconditioned = opt.use_preconditioner;
  rep.delta = bg.config().delta;
  rep.nx = g.nx;
  rep.ny = g.ny;
  rep.h = g.h;
  const ApproximateInverse* pre = opt.use_preconditioner ? &inverse : nullptr;

  ScalarField z(g, 0.0);
  ScalarField F = residual_F(bg, z);
  double res = norm_Y(F, sp);
  rep.residual_at_zero = res;
  rep.residual_trace.push_back(res);

  auto fail = [&](const std::string& why) {
    rep.converged = false;
    rep.failure = why;
    rep.final_residual = res;
    rep.z_norm_X = norm_X(z, sp);
    rep.z_sup = sup_norm(z);
    rep.solve_seconds = seconds_since(t0);
    throw SolverFailure("fixed point: " + why, rep);
  };
  if (!std::isfinite(res)) fail("non-finite residual at z = 0");

  ScalarField potential = bg.weight();
  std::vector<double> ratios;
  int increases = 0;
  for (int k = 0; k < opt.max_iter && res > opt.tol; ++k) {
    if (opt.strategy == Strategy::Newton)
      for (std::size_t n = 0; n < z.size(); ++n) potential[n] = bg.weight()[n] * std::exp(z[n]);
    LinearSolveResult lin = solve_linear(potential, pre, F, opt.linear_tol, opt.krylov_max_iter);
    rep.krylov_iterations.push_back(lin.iterations);
    if (!lin.converged) {
      std::ostringstream msg;
      msg << "linear solve stalled at relative residual " << lin.relative_residual << " after "
          << lin.iterations << " iterations";
      fail(msg.str());
    }
    const ScalarField& dz = lin.solution;
    const double step = norm_X(dz, sp);
    if (k == 0) rep.ball_radius = 2.0 * step;
    if (!rep.step_trace.empty() && rep.step_trace.back() > 0.0) ratios.push_back(step / rep.step_trace.back());
    rep.step_trace.push_back(step);
    z -= dz;
    F = residual_F(bg, z);
    const double next = norm_Y(F, sp);
    rep.residual_trace.push_back(next);
    rep.iterations = k + 1;
    if (!std::isfinite(next)) {
      res = next;
      fail("non-finite residual");
    }
    increases = next > res ? increases + 1 : 0;
    res = next;
    if (increases >= opt.divergence_window) {
      std::ostringstream msg;
      msg << "diverged: residual increased for " << increases << " consecutive iterations";
      fail(msg.str());
    }
    const int lag = 5;
    const auto& tr = rep.residual_trace;
    if (tr.size() > static_cast<std::size_t>(lag) && res > opt.tol && res > 0.99 * tr[tr.size() - 1 - lag])
      fail("stalled: residual decreased by less than 1% over 5 iterations");
  }
  if (!(res <= opt.tol)) {
    std::ostringstream msg;
    msg << "max_iter = " << opt.max_iter << " reached with residual " << res;
    fail(msg.str());
  }

  // With fewer than two steps there is no observed ratio; probe one more map
  // application at the converged point instead.
  if (ratios.empty() && !rep.step_trace.empty() && rep.step_trace.back() > 0.0) {
    if (opt.strategy == Strategy::Newton)
      for (std::size_t n = 0; n < z.size(); ++n) potential[n] = bg.weight()[n] * std::exp(z[n]);
    LinearSolveResult probe = solve_linear(potential, pre, F, opt.linear_tol, opt.krylov_max_iter);
    ratios.push_back(norm_X(probe.solution, sp) / rep.step_trace.back());
  }
  for (double r : ratios) rep.contraction = std::max(rep.contraction, r);
  rep.converged = true;
  rep.final_residual = res;
  rep.z_norm_X = norm_X(z, sp);
  rep.z_sup = sup_norm(z);
  rep.solve_seconds = seconds_since(t0);
  return {std::move(z), std::move(rep)};
}

ScalarField Solution::u() const {
  ScalarField out = background->log_part();
  const ScalarField& s = background->smooth_part();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += s[k] + z[k];
  return out;
}

ScalarField Solution::exp_u() const {
  ScalarField out = background->weight();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::exp(z[k]);
  return out;
}

ScalarField Solution::u_smooth() const {
  ScalarField out = background->smooth_part();
  out += z;
  return out;
}

Solution solve(const VortexConfiguration& config, const SolverOptions& options, const ProfileSet& profiles) {
  const auto t0 = Clock::now();
  auto bg = std::make_shared<const AnsatzBackground>(config, profiles, options.h);
  const ApproximateInverse inverse(bg);
  const double setup = seconds_since(t0);
  try {
    FixedPointResult fp = run_fixed_point(*bg, inverse, options);
    fp.report.setup_seconds = setup;
    return Solution{bg, std::move(fp.z), std::move(fp.report)};
  } catch (const SolverFailure& e) {
    SolveReport rep = e.report();
    rep.setup_seconds = setup;
    throw SolverFailure(e.what(), rep);
  }
}

}  // namespace vortexglue
