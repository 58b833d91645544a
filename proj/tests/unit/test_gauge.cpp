#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "support.hpp"
#include "vortexglue/diagnostics.hpp"
#include "vortexglue/errors.hpp"
#include "vortexglue/gauge.hpp"

using namespace vortexglue;
using vortexglue::testing::rel;
using vortexglue::testing::profiles_for;
using vortexglue::testing::single_box;
using vortexglue::testing::small_torus;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const Solution& box_solution(double h) {
  static std::map<double, Solution> cache;
  auto it = cache.find(h);
  if (it == cache.end()) {
    SolverOptions o;
    o.h = h;
    const auto cfg = single_box(3.0, 0.1);
    it = cache.emplace(h, solve(cfg, o, profiles_for(cfg))).first;
  }
  return it->second;
}

const Solution& torus_solution() {
  static const Solution s = [] {
    const auto cfg = small_torus(0.1);
    return solve(cfg, SolverOptions{}, profiles_for(cfg));
  }();
  return s;
}

std::pair<int, int> vortex_node(const Solution& s, int v) {
  const Vec2 p = s.background->center(v);
  const auto& g = s.geometry();
  const int off = g.boundary == Boundary::Periodic ? 0 : 1;
  return {static_cast<int>(std::lround(p.x() / g.h)) - off, static_cast<int>(std::lround(p.y() / g.h)) - off};
}

}  // namespace

TEST_CASE("vacuum") {
  const GridGeometry g{48, 32, 0.125, 0.1, Boundary::Periodic};
  const GaugePair pair = reconstruct_vortex_free(ScalarField(g));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(pair.higgs[k] == std::complex<double>(1.0, 0.0));
    CHECK(std::abs(pair.d1[k]) == 0.0);
    CHECK(std::abs(pair.d2[k]) == 0.0);
    CHECK(pair.f12[k] == 0.0);
  }
  const auto r = bogomolny_residual(pair, 0.1);
  CHECK(r.r1 == 0.0);
  CHECK(r.r2 == 0.0);
  CHECK(energy(pair, 0).total == 0.0);
  CHECK(flux_number(pair) == 0.0);
  ScalarField bad(g);
  bad[3] = -INFINITY;
  CHECK_THROWS_AS(reconstruct_vortex_free(bad), ConfigError);
}

TEST_CASE("single vortex in a box") {
  const Solution& s = box_solution(1.0 / 16);
  const GaugePair pair = reconstruct(s);
  const ScalarField e = s.exp_u();
  double worst = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k)
    worst = std::max(worst, std::abs(std::norm(pair.higgs[k]) - e[k]));
  CHECK(worst < 1e-13);
  const auto [i, j] = vortex_node(s, 0);
  CHECK(std::abs(pair.higgs[s.geometry().index(i, j)]) == 0.0);
  CHECK(winding_number(s, i, j, 4) == 1);
  CHECK(winding_number(s, i, j, 20) == 1);
  CHECK(std::abs(flux_number(pair) - 1.0) <= 1e-3);
  const EnergyReport en = energy(pair, s);
  CHECK(en.target == doctest::Approx(kTwoPi));
  CHECK(std::abs(en.total - kTwoPi) <= 0.01 * kTwoPi);
}

TEST_CASE("Bogomolny residuals are second order") {
  const auto coarse = bogomolny_residual(reconstruct(box_solution(1.0 / 8)), 0.1);
  const auto fine = bogomolny_residual(reconstruct(box_solution(1.0 / 16)), 0.1);
  CHECK(coarse.r1 / fine.r1 == rel(4.0, 0.25));
  CHECK(coarse.r2 / fine.r2 == rel(4.0, 0.25));
}

TEST_CASE("curvature stencil is second order on the background") {
  const auto cfg = single_box(3.0, 0.1);
  const ProfileSet profs = profiles_for(cfg);
  std::vector<double> err;
  for (double h : {1.0 / 32, 1.0 / 64}) {
    Solution s;
    s.background = std::make_shared<const AnsatzBackground>(cfg, profs, h);
    s.z = ScalarField(s.background->geometry());
    const GaugePair pair = reconstruct(s);
    const auto& w = s.background->weight();
    const auto& f0 = s.background->residual_at_zero();
    // with z = 0, -Lap b = F0 - (e^b - 1) exactly
    double worst = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (pair.valid[k]) worst = std::max(worst, std::abs(2.0 * pair.f12[k] - (f0[k] - (w[k] - 1.0))));
    err.push_back(worst);
  }
  CHECK(err[1] < 0.01);
  CHECK(err[0] / err[1] == rel(4.0, 0.25));
}

TEST_CASE("curvature matches the scalar equation") {
  std::vector<double> err;
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const Solution& s = box_solution(h);
    const GaugePair pair = reconstruct(s);
    const ScalarField e = s.exp_u();
    double worst = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k)
      if (pair.valid[k]) worst = std::max(worst, std::abs(2.0 * pair.f12[k] - (1.0 - e[k])));
    err.push_back(worst);
  }
  // the worst node sits on the plateau corner of the cutoff, still pre-asymptotic at these h
  CHECK(err[1] < 6e-3);
  CHECK(err[0] / err[1] > 2.0);
}

TEST_CASE("opposite sign is the conjugate pair") {
  const Solution& s = box_solution(1.0 / 8);
  const GaugePair up = reconstruct(s, VortexSign::Upper);
  const GaugePair down = reconstruct(s, VortexSign::Lower);
  for (std::size_t k = 0; k < up.higgs.size(); ++k) {
    CHECK(std::abs(down.higgs[k]) == std::abs(up.higgs[k]));
    CHECK(down.f12[k] == -up.f12[k]);
    CHECK(std::norm(down.d1[k]) + std::norm(down.d2[k]) ==
          rel(std::norm(up.d1[k]) + std::norm(up.d2[k]), 1e-10));
  }
  const auto [i, j] = vortex_node(s, 0);
  CHECK(winding_number(s, i, j, 4, VortexSign::Lower) == -1);
  CHECK(flux_number(down) == rel(-flux_number(up), 1e-10));
  CHECK(energy(down, s).total == rel(energy(up, s).total, 1e-10));
  const auto ru = bogomolny_residual(up, 0.1), rd = bogomolny_residual(down, 0.1);
  CHECK(rd.r1 == rel(ru.r1, 1e-10));
  CHECK(rd.r2 == rel(ru.r2, 1e-10));
}

TEST_CASE("two vortices on a torus") {
  const Solution& s = torus_solution();
  const GaugePair pair = reconstruct(s);
  CHECK(std::abs(flux_number(pair) - 2.0) <= 1e-3);
  const EnergyReport en = energy(pair, s);
  CHECK(std::abs(en.total - 2.0 * kTwoPi) <= 0.01 * 2.0 * kTwoPi);
  for (int v = 0; v < 2; ++v) {
    const auto [i, j] = vortex_node(s, v);
    CHECK(winding_number(s, i, j, 6) == 1);
  }
}

TEST_CASE("random u is not self-dual") {
  const Solution& s = torus_solution();
  Solution fake = s;
  std::mt19937_64 rng(3);
  fake.z = random_smooth_field(s.geometry(), rng, 6);
  fake.z *= 0.5 / sup_norm(fake.z);
  const auto good = bogomolny_residual(reconstruct(s), s.delta());
  const auto bad = bogomolny_residual(reconstruct(fake), s.delta());
  CHECK(bad.r2 > 100 * good.r2);
  CHECK(bad.r2 > 1.0);
}

TEST_CASE("field decay audit") {
  VortexConfiguration cfg = single_box(4.5, 0.1);
  SolverOptions o;
  o.h = 1.0 / 8;
  const Solution s = solve(cfg, o, profiles_for(cfg));
  const DecayAudit a = field_decay_audit(reconstruct(s), s, 5.0, 15.0);
  CHECK(a.fitted_rate >= -1.1);
  CHECK(a.fitted_rate <= -0.9);
  CHECK(a.max_ratio <= 1.6);
  CHECK(a.fit_r_squared > 0.99);
}
