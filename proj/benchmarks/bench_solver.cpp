#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <random>

#include "vortexglue/approximate_inverse.hpp"
#include "vortexglue/diagnostics.hpp"
#include "vortexglue/glue_solver.hpp"

using namespace vortexglue;

namespace {

VortexConfiguration reference_torus(double delta) {
  VortexConfiguration c;
  c.domain = {Boundary::Periodic, 4.0, 2.0};
  c.vortices = {{Vec2(0.75, 0.75), 1}, {Vec2(2.75, 0.75), 1}};
  c.delta = delta;
  return c;
}

// Backgrounds keyed by 1/delta; profiles are computed once.
std::shared_ptr<const AnsatzBackground> background(int inv_delta) {
  static std::map<int, std::shared_ptr<const AnsatzBackground>> store;
  static const ProfileSet profiles = compute_profiles(reference_torus(0.1));
  auto& bg = store[inv_delta];
  if (!bg) bg = std::make_shared<const AnsatzBackground>(reference_torus(1.0 / inv_delta), profiles, 1.0 / 16);
  return bg;
}

void BM_Helmholtz(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SpectralHelmholtz solver(2 * n, n, 1.0 / 16, Boundary::Periodic);
  std::vector<double> rhs(2 * n * n), out(rhs.size());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (double& v : rhs) v = nd(rng);
  for (auto _ : state) {
    solver.solve(rhs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(rhs.size()));
}
BENCHMARK(BM_Helmholtz)->Arg(160)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_ApplyS(benchmark::State& state) {
  const auto bg = background(static_cast<int>(state.range(0)));
  const ApproximateInverse S(bg);
  std::mt19937_64 rng(2);
  const ScalarField f = random_smooth_field(bg->geometry(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(S.apply(f));
}
BENCHMARK(BM_ApplyS)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

// Linear solve L v = F(0), with and without the approximate inverse.
void BM_LinearSolve(benchmark::State& state) {
  const auto bg = background(static_cast<int>(state.range(0)));
  const bool precondition = state.range(1) != 0;
  const ApproximateInverse S(bg);
  int iterations = 0;
  for (auto _ : state) {
    const LinearSolveResult r =
        solve_linear(bg->weight(), precondition ? &S : nullptr, bg->residual_at_zero(), 1e-9, 200000);
    iterations = r.iterations;
  }
  state.counters["krylov"] = iterations;
}
BENCHMARK(BM_LinearSolve)
    ->ArgsProduct({{5, 10, 20}, {0, 1}})
    ->ArgNames({"inv_delta", "S"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
