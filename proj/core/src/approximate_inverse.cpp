#include "vortexglue/approximate_inverse.hpp"

#include <atomic>
#include <cmath>
#include <map>

#include "vortexglue/errors.hpp"
#include "vortexglue/krylov.hpp"
#include "vortexglue/parallel.hpp"

namespace vortexglue {

struct ApproximateInverse::Patch {
  int vortex = 0;
  IndexBox box;          // solve region
  GridGeometry local;    // Dirichlet grid on the solve region
  int gi = 0, gj = 0;    // offset of the g_j box inside the solve region
  std::vector<double> potential;
  std::unique_ptr<SpectralHelmholtz> preconditioner;
  mutable std::atomic<int> max_iterations{0};
};

ApproximateInverse::ApproximateInverse(std::shared_ptr<const AnsatzBackground> background)
    : ApproximateInverse(std::move(background), Options{}) {}

ApproximateInverse::~ApproximateInverse() = default;

ApproximateInverse::ApproximateInverse(std::shared_ptr<const AnsatzBackground> background, Options options)
    : background_(std::move(background)), options_(options) {
  const AnsatzBackground& bg = *background_;
  const GridGeometry& g = bg.geometry();
  const SampledPartition& sp = bg.sampled();
  const PartitionOfUnity& part = bg.partition();
  const int V = part.vortex_count();
  const int margin = static_cast<int>(std::ceil(options_.patch_margin / g.h - 1e-9));

  patches_.resize(V);
  parallel_for(static_cast<std::size_t>(V), [&](std::size_t jv) {
    const int j = static_cast<int>(jv);
    auto patch = std::make_unique<Patch>();
    patch->vortex = j;
    const IndexBox& gbox = sp.vortex_member(j).box;
    patch->box = gbox.grown(margin, g);
    patch->gi = gbox.i0 - patch->box.i0;
    patch->gj = gbox.j0 - patch->box.j0;
    patch->local = GridGeometry{patch->box.ni, patch->box.nj, g.h, g.delta, Boundary::Dirichlet};
    const RadialProfile& prof = bg.profile(bg.config().vortices[j].multiplicity);
    const int m = prof.multiplicity;
    const int offset = g.boundary == Boundary::Periodic ? 0 : 1;
    patch->potential.resize(patch->box.size());
    for (int b = 0; b < patch->box.nj; ++b)
      for (int a = 0; a < patch->box.ni; ++a) {
        const Vec2 x((patch->box.i0 + a + offset) * g.h, (patch->box.j0 + b + offset) * g.h);
        const double r = bg.offset(j, x).norm();
        double e = 0.0;
        if (r >= 1e-9 * g.h) e = std::exp(2.0 * m * std::log(r) + eval_profile(prof, r).w);
        patch->potential[patch->box.local(a, b)] = e;
      }
    patch->preconditioner =
        std::make_unique<SpectralHelmholtz>(patch->box.ni, patch->box.nj, g.h, Boundary::Dirichlet, 1.0);
    patches_[j] = std::move(patch);
  });

  // Leftover cells coloured so that members sharing a colour have disjoint supports.
  const bool periodic = g.boundary == Boundary::Periodic;
  auto axis_colour = [&](int i, int cells) {
    if (periodic && cells % 2 == 1 && i == cells - 1) return 2;
    return i % 2;
  };
  std::map<int, std::vector<int>> by_colour;
  for (int k = 0; k < part.leftover_count(); ++k) {
    const CellIndex c = part.leftover_cell(k);
    by_colour[axis_colour(c.i, part.cells_x()) + 3 * axis_colour(c.j, part.cells_y())].push_back(k);
  }
  for (auto& [colour, members] : by_colour) colours_.push_back(std::move(members));
  if (!colours_.empty()) global_ = std::make_unique<SpectralHelmholtz>(g.nx, g.ny, g.h, g.boundary, 1.0);
}

int ApproximateInverse::max_inner_iterations() const {
  int m = 0;
  for (const auto& p : patches_) m = std::max(m, p->max_iterations.load());
  return m;
}

ScalarField ApproximateInverse::apply(const ScalarField& f) const {
  ScalarField out(f.geometry());
  apply(f.values(), out.values());
  return out;
}

void ApproximateInverse::apply(std::span<const double> f, std::span<double> out) const {
  const AnsatzBackground& bg = *background_;
  const GridGeometry& g = bg.geometry();
  const SampledPartition& sp = bg.sampled();
  std::fill(out.begin(), out.end(), 0.0);

  // Vortex patches: g_j Lj^{-1} (g_j f), solved independently.
  std::vector<std::vector<double>> contributions(patches_.size());
  parallel_for(patches_.size(), [&](std::size_t jv) {
    const Patch& patch = *patches_[jv];
    const SampledMember& mem = sp.vortex_member(static_cast<int>(jv));
    std::vector<double> rhs(patch.box.size(), 0.0), sol(patch.box.size(), 0.0);
    for (int b = 0; b < mem.box.nj; ++b)
      for (int a = 0; a < mem.box.ni; ++a) {
        const double gv = mem.normalized[mem.box.local(a, b)];
        if (gv != 0.0) rhs[patch.box.local(a + patch.gi, b + patch.gj)] = gv * f[mem.box.global(g, a, b)];
      }
    const auto op = [&](std::span<const double> in, std::span<double> o) {
      apply_schrodinger(patch.local, patch.potential, in, o);
    };
    const auto pre = [&](std::span<const double> in, std::span<double> o) { patch.preconditioner->solve(in, o); };
    const KrylovResult kr = flexible_pcg(op, pre, rhs, sol, options_.inner_tol, options_.inner_max_iter);
    if (!kr.converged)
      throw ConvergenceError("approximate inverse: patch solve for vortex " + std::to_string(jv) +
                             " stalled at relative residual " + std::to_string(kr.relative_residual));
    int seen = patch.max_iterations.load();
    while (kr.iterations > seen && !patch.max_iterations.compare_exchange_weak(seen, kr.iterations)) {
    }
    auto& c = contributions[jv];
    c.assign(mem.box.size(), 0.0);
    for (int b = 0; b < mem.box.nj; ++b)
      for (int a = 0; a < mem.box.ni; ++a) {
        const std::size_t k = mem.box.local(a, b);
        c[k] = mem.normalized[k] * sol[patch.box.local(a + patch.gi, b + patch.gj)];
      }
  });
  for (std::size_t jv = 0; jv < patches_.size(); ++jv) {
    const SampledMember& mem = sp.vortex_member(static_cast<int>(jv));
    for (int b = 0; b < mem.box.nj; ++b)
      for (int a = 0; a < mem.box.ni; ++a) out[mem.box.global(g, a, b)] += contributions[jv][mem.box.local(a, b)];
  }

  // Leftover cells: one global (1 - Delta)^{-1} per colour class.
  if (colours_.empty()) return;
  std::vector<double> rhs(g.size()), sol(g.size());
  for (const auto& colour : colours_) {
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int k : colour) {
      const SampledMember& mem = sp.leftover_member(k);
      for (int b = 0; b < mem.box.nj; ++b)
        for (int a = 0; a < mem.box.ni; ++a) {
          const double hv = mem.normalized[mem.box.local(a, b)];
          if (hv != 0.0) {
            const std::size_t node = mem.box.global(g, a, b);
            rhs[node] += hv * f[node];
          }
        }
    }
    global_->solve(rhs, sol);
    for (int k : colour) {
      const SampledMember& mem = sp.leftover_member(k);
      for (int b = 0; b < mem.box.nj; ++b)
        for (int a = 0; a < mem.box.ni; ++a) {
          const double hv = mem.normalized[mem.box.local(a, b)];
          if (hv != 0.0) {
            const std::size_t node = mem.box.global(g, a, b);
            out[node] += hv * sol[node];
          }
        }
    }
  }
}

}  // namespace vortexglue
