#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vortexglue/approximate_inverse.hpp"
#include "vortexglue/diagnostics.hpp"
#include "vortexglue/errors.hpp"
#include "vortexglue/glue_solver.hpp"

using namespace vortexglue;
using vortexglue::testing::rel;
using vortexglue::testing::profiles;
using vortexglue::testing::profiles_for;
using vortexglue::testing::small_torus;

namespace {

std::shared_ptr<const AnsatzBackground> background(const VortexConfiguration& c, double h = 1.0 / 16) {
  return std::make_shared<const AnsatzBackground>(c, profiles_for(c), h);
}

ScalarField smooth(const GridGeometry& g, unsigned seed, double amplitude) {
  std::mt19937_64 rng(seed);
  ScalarField f = random_smooth_field(g, rng, 4);
  f *= amplitude / sup_norm(f);
  return f;
}

double rel_diff(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return num / den;
}

// Lone vortex whose patch core reaches 30 rescaled units, so the glued
// ansatz is exact to rounding.
VortexConfiguration isolated_vortex() {
  VortexConfiguration c;
  c.domain = {Boundary::Periodic, 4.0, 4.0};
  c.vortices = {{Vec2(2.5, 2.5), 1}};
  c.delta = 0.025;
  c.r0 = 1.0;
  return c;
}

}  // namespace

TEST_CASE("ansatz background on cores and outside patches") {
  const auto cfg = small_torus(0.1);
  const auto bg = background(cfg);
  const auto& g = bg->geometry();
  const auto& P = bg->partition();
  const RadialProfile& U = bg->profile(1);
  const ScalarField& F0 = bg->residual_at_zero();
  int core_nodes = 0, free_nodes = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 x = g.point(i, j);
      const std::size_t k = g.index(i, j);
      const double b = bg->smooth_part()[k] + bg->log_part()[k];
      const double W = bg->weight()[k];
      CHECK(W >= 0.0);
      CHECK(W < 1.0 + 1e-15);
      bool any = false;
      for (int v = 0; v < P.vortex_count(); ++v) {
        const double r = bg->offset(v, x).norm();
        if (r > 0.0 && r < 0.9 * P.core_radius(v) / cfg.delta) {
          const auto s = eval_profile(U, r);
          CHECK(b == doctest::Approx(s.U).epsilon(1e-12));
          CHECK(W == doctest::Approx(1.0 - s.one_minus_exp_U).epsilon(1e-12));
          CHECK(std::abs(F0[k]) < 1e-12);
          ++core_nodes;
        }
        if (P.eval(x, PartitionKind::Phi, v, 0).value != 0.0) any = true;
      }
      if (!any) {
        CHECK(b == 0.0);
        CHECK(W == 1.0);
        CHECK(F0[k] == 0.0);
        ++free_nodes;
      }
    }
  CHECK(core_nodes > 100);
  CHECK(free_nodes > 100);
  // Vortices sit on nodes here: W vanishes there.
  for (int v = 0; v < 2; ++v) {
    const Vec2 p = bg->center(v);
    const int i = static_cast<int>(std::lround(p.x() / g.h)), j = static_cast<int>(std::lround(p.y() / g.h));
    CHECK(bg->weight()(i, j) == 0.0);
    CHECK(std::isinf(bg->log_part()(i, j)));
  }
}

TEST_CASE("missing profile is rejected") {
  VortexConfiguration c = small_torus(0.1);
  c.vortices[1].multiplicity = 2;
  CHECK_THROWS_AS(AnsatzBackground(c, profiles({1}), 1.0 / 16), ConfigError);
}

TEST_CASE("residual derivative matches L by finite differences") {
  const auto bg = background(small_torus(0.1));
  const auto& g = bg->geometry();
  const ScalarField z = smooth(g, 1, 0.1), v = smooth(g, 2, 0.5);
  const double eps = 1e-6;
  ScalarField zp = z;
  for (std::size_t k = 0; k < z.size(); ++k) zp[k] += eps * v[k];
  ScalarField fd = residual_F(*bg, zp);
  fd -= residual_F(*bg, z);
  fd *= 1.0 / eps;
  ScalarField expect = laplacian(v);
  expect *= -1.0;
  for (std::size_t k = 0; k < v.size(); ++k) expect[k] += bg->weight()[k] * std::exp(z[k]) * v[k];
  CHECK(rel_diff(fd, expect) <= 1e-6);
  // At z = 0 the residual is F(0).
  CHECK(rel_diff(residual_F(*bg, ScalarField(g)), bg->residual_at_zero()) == 0.0);
}

TEST_CASE("linearised operator") {
  const auto bg = background(small_torus(0.1));
  const auto& g = bg->geometry();
  CHECK(rel_diff(apply_L(*bg, ScalarField(g, 1.0)), bg->weight()) < 1e-12);
  const ScalarField a = smooth(g, 3, 1.0), b = smooth(g, 4, 1.0);
  const double ab = dot(apply_L(*bg, a).values(), b.values());
  const double ba = dot(a.values(), apply_L(*bg, b).values());
  CHECK(ab == rel(ba, 1e-12));
  const ScalarField La = apply_L(*bg, a), lap = laplacian(a);
  for (std::size_t k = 0; k < a.size(); ++k)
    if (bg->weight()[k] == 1.0) CHECK(La[k] == doctest::Approx(a[k] - lap[k]).epsilon(1e-11).scale(1.0));
}

TEST_CASE("approximate inverse") {
  const auto cfg = small_torus(0.1);
  const auto bg = background(cfg);
  const auto& g = bg->geometry();
  const ApproximateInverse S(bg);

  SUBCASE("zero maps to zero") { CHECK(sup_norm(S.apply(ScalarField(g))) == 0.0); }

  SUBCASE("data inside one leftover core") {
    // Same-colour leftover cells share one global solve, so S f picks up
    // Green's-function tails from the other cells of that colour. They decay
    // with the rescaled lattice spacing.
    std::vector<double> mismatch;
    for (double d : {0.1, 0.05}) {
      const auto b = background(small_torus(d));
      const auto& gg = b->geometry();
      const auto& P = b->partition();
      const ApproximateInverse Sd(b);
      const int k = P.leftover_count() / 2;
      const Vec2 c = P.cell_center(P.leftover_cell(k)) / d;
      const double half = 0.2 * P.r0() / d;
      ScalarField f(gg);
      for (int j = 0; j < gg.ny; ++j)
        for (int i = 0; i < gg.nx; ++i) {
          const Vec2 e = gg.point(i, j) - c;
          if (std::abs(e.x()) < half && std::abs(e.y()) < half) f(i, j) = 1.0 + 0.1 * e.x();
        }
      REQUIRE(sup_norm(f) > 0.0);
      ScalarField expect = helmholtz_solve(f);
      for (int j = 0; j < gg.ny; ++j)
        for (int i = 0; i < gg.nx; ++i) expect(i, j) *= P.eval(gg.point(i, j), PartitionKind::H, k, 0).value;
      mismatch.push_back(rel_diff(Sd.apply(f), expect));
    }
    CHECK(mismatch[0] < 0.02);
    CHECK(mismatch[1] < 1e-3);
    CHECK(mismatch[1] < mismatch[0] / 10);
  }

  SUBCASE("defect audit shrinks with delta") {
    std::vector<double> defect;
    for (double d : {0.1, 0.05}) {
      const auto b = background(vortexglue::testing::reference_torus(d));
      const ApproximateInverse Sd(b);
      defect.push_back(inverse_defect_audit(*b, Sd, 4, 5, 4).max_ratio);
    }
    CHECK(defect[0] <= 0.5);
    CHECK(defect[1] < defect[0]);
  }
}

TEST_CASE("linear solves") {
  const auto bg = background(small_torus(0.1));
  const ApproximateInverse S(bg);
  const ScalarField v = smooth(bg->geometry(), 9, 1.0);
  const ScalarField rhs = apply_L(*bg, v);
  const LinearSolveResult pre = solve_linear(bg->weight(), &S, rhs, 1e-12, 1000);
  const LinearSolveResult plain = solve_linear(bg->weight(), nullptr, rhs, 1e-12, 100000);
  CHECK(pre.converged);
  CHECK(plain.converged);
  CHECK(rel_diff(pre.solution, v) < 1e-8);
  CHECK(rel_diff(plain.solution, v) < 1e-8);
  CHECK(pre.iterations < plain.iterations);
}

TEST_CASE("Krylov counts across delta") {
  std::vector<int> with_s, without_s;
  for (double d : {0.2, 0.1, 0.05}) {
    const auto bg = background(small_torus(d));
    const ApproximateInverse S(bg);
    with_s.push_back(solve_linear(bg->weight(), &S, bg->residual_at_zero(), 1e-9, 1000).iterations);
    without_s.push_back(solve_linear(bg->weight(), nullptr, bg->residual_at_zero(), 1e-9, 100000).iterations);
  }
  for (int n : with_s) CHECK(n <= 2 * with_s.front());
  CHECK(without_s.back() > with_s.back());
}

TEST_CASE("exact single-vortex ansatz needs no correction") {
  const auto cfg = isolated_vortex();
  SolverOptions o;
  o.h = 0.25;
  const auto bg = std::make_shared<const AnsatzBackground>(cfg, profiles_for(cfg), o.h);
  CHECK(norm_Y(bg->residual_at_zero(), bg->sampled()) <= 1e-9);
  const Solution sol = solve(cfg, o, profiles_for(cfg));
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations <= 2);
  CHECK(sol.report.z_norm_X <= 10 * o.tol);
  CHECK(superposition_error(sol).sup <= 10 * o.tol);
}

TEST_CASE("two-vortex solves") {
  // Subcases re-enter the test body; solve once.
  const SolverOptions o;
  static const Solution a = solve(small_torus(0.1), o, profiles({1}));
  static const Solution b = solve(small_torus(0.05), o, profiles({1}));
  SUBCASE("residual certificate and contraction") {
    for (const Solution* s : {&a, &b}) {
      CHECK(s->report.converged);
      CHECK(s->report.final_residual <= o.tol);
      CHECK(s->report.contraction <= 0.5);
      CHECK(s->report.residual_trace.size() == static_cast<std::size_t>(s->report.iterations) + 1);
    }
  }
  SUBCASE("correction shrinks exponentially") { CHECK(b.report.z_sup <= a.report.z_sup / 5); }
  SUBCASE("frozen and Newton agree") {
    SolverOptions n = o;
    n.strategy = Strategy::Newton;
    const Solution c = solve(small_torus(0.1), n, profiles({1}));
    CHECK(c.report.converged);
    double diff = 0.0;
    for (std::size_t k = 0; k < a.z.size(); ++k) diff = std::max(diff, std::abs(a.z[k] - c.z[k]));
    CHECK(diff <= 1e-6);
  }
  SUBCASE("e^u < 1 off the vortices and 0 on them") {
    const ScalarField e = a.exp_u();
    const auto& g = a.geometry();
    int zeros = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      CHECK(e[k] < 1.0);
      CHECK(e[k] >= 0.0);
      if (e[k] == 0.0) ++zeros;
    }
    CHECK(zeros == 2);
    for (int v = 0; v < 2; ++v) {
      const Vec2 p = a.background->center(v);
      CHECK(e(static_cast<int>(std::lround(p.x() / g.h)), static_cast<int>(std::lround(p.y() / g.h))) == 0.0);
    }
  }
  SUBCASE("flux identity on the torus") {
    for (const Solution* s : {&a, &b}) {
      const ScalarField e = s->exp_u();
      double integral = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) integral += 1.0 - e[k];
      integral *= s->geometry().h * s->geometry().h;
      const double target = 8.0 * std::numbers::pi;
      CHECK(std::abs(integral - target) / target <= 1e-3);
      CHECK(flux_error(*s) <= 1e-3);
    }
  }
}

TEST_CASE("area obstruction fails with a positive residual") {
  VortexConfiguration c;
  c.domain = {Boundary::Periodic, 1.0, 1.0};
  c.vortices = {{Vec2(0.5, 0.5), 1}};
  c.delta = 0.3;
  CHECK_FALSE(c.satisfies_area_bound());
  try {
    solve(c, SolverOptions{}, profiles({1}));
    FAIL("expected SolverFailure");
  } catch (const SolverFailure& f) {
    CHECK_FALSE(f.report().converged);
    CHECK(f.report().final_residual > 1e-4);
    CHECK_FALSE(f.report().residual_trace.empty());
    CHECK_FALSE(f.report().failure.empty());
  }
}
