#include "vortexglue/sampled_partition.hpp"

#include <algorithm>
#include <cmath>

#include "vortexglue/parallel.hpp"

namespace vortexglue {

std::size_t IndexBox::global(const GridGeometry& g, int a, int b) const {
  int i = i0 + a, j = j0 + b;
  if (g.boundary == Boundary::Periodic) {
    i = ((i % g.nx) + g.nx) % g.nx;
    j = ((j % g.ny) + g.ny) % g.ny;
  }
  return g.index(i, j);
}

IndexBox IndexBox::grown(int margin, const GridGeometry& g) const {
  IndexBox b{i0 - margin, j0 - margin, ni + 2 * margin, nj + 2 * margin};
  if (g.boundary == Boundary::Periodic) {
    if (b.ni > g.nx) {
      b.i0 = i0;
      b.ni = g.nx;
    }
    if (b.nj > g.ny) {
      b.j0 = j0;
      b.nj = g.ny;
    }
  } else {
    const int i1 = std::min(g.nx, b.i0 + b.ni), j1 = std::min(g.ny, b.j0 + b.nj);
    b.i0 = std::max(0, b.i0);
    b.j0 = std::max(0, b.j0);
    b.ni = std::max(0, i1 - b.i0);
    b.nj = std::max(0, j1 - b.j0);
  }
  return b;
}

IndexBox index_box(const GridGeometry& g, const std::array<double, 4>& box) {
  const double d = g.delta;
  const int offset = g.boundary == Boundary::Periodic ? 0 : 1;
  const int i0 = static_cast<int>(std::ceil(box[0] / d / g.h)) - offset;
  const int i1 = static_cast<int>(std::floor(box[2] / d / g.h)) - offset;
  const int j0 = static_cast<int>(std::ceil(box[1] / d / g.h)) - offset;
  const int j1 = static_cast<int>(std::floor(box[3] / d / g.h)) - offset;
  IndexBox b{i0, j0, std::max(0, i1 - i0 + 1), std::max(0, j1 - j0 + 1)};
  return b.grown(0, g);
}

SampledPartition::SampledPartition(std::shared_ptr<const PartitionOfUnity> partition,
                                   const GridGeometry& geometry)
    : partition_(std::move(partition)), geometry_(geometry) {
  const int V = partition_->vortex_count();
  const int K = partition_->leftover_count();
  members_.resize(static_cast<std::size_t>(V + K));
  parallel_for(members_.size(), [&](std::size_t m) {
    SampledMember& mem = members_[m];
    const bool vortex = static_cast<int>(m) < V;
    mem.kind = vortex ? PartitionKind::Phi : PartitionKind::Psi;
    mem.index = vortex ? static_cast<int>(m) : static_cast<int>(m) - V;
    mem.box = index_box(geometry_, partition_->support_box(mem.kind, mem.index));
    mem.base.assign(mem.box.size(), 0.0);
    mem.normalized.assign(mem.box.size(), 0.0);
    const PartitionKind norm_kind = vortex ? PartitionKind::G : PartitionKind::H;
    const int offset = geometry_.boundary == Boundary::Periodic ? 0 : 1;
    for (int b = 0; b < mem.box.nj; ++b)
      for (int a = 0; a < mem.box.ni; ++a) {
        const Vec2 x((mem.box.i0 + a + offset) * geometry_.h, (mem.box.j0 + b + offset) * geometry_.h);
        const std::size_t k = mem.box.local(a, b);
        mem.base[k] = partition_->eval(x, mem.kind, mem.index, 0).value;
        if (mem.base[k] != 0.0) mem.normalized[k] = partition_->eval(x, norm_kind, mem.index, 0).value;
      }
  });
}

namespace {

double member_h2_norm_sq(const ScalarField& f, const SampledMember& mem, const GridGeometry& g) {
  // Product tabulated on the box padded by two zero rings so every stencil
  // touching the support stays inside the local array.
  const int pad = 2;
  const int ni = mem.box.ni + 2 * pad, nj = mem.box.nj + 2 * pad;
  std::vector<double> v(static_cast<std::size_t>(ni) * nj, 0.0);
  for (int b = 0; b < mem.box.nj; ++b)
    for (int a = 0; a < mem.box.ni; ++a) {
      const double w = mem.base[mem.box.local(a, b)];
      if (w != 0.0) v[static_cast<std::size_t>(b + pad) * ni + (a + pad)] = w * f[mem.box.global(g, a, b)];
    }
  const double h = g.h;
  const double inv_2h = 0.5 / h, inv_h2 = 1.0 / (h * h), inv_4h2 = 0.25 / (h * h);
  auto V = [&](int a, int b) { return v[static_cast<std::size_t>(b) * ni + a]; };
  double acc = 0.0;
  for (int b = 1; b < nj - 1; ++b)
    for (int a = 1; a < ni - 1; ++a) {
      const double c = V(a, b);
      const double l = V(a - 1, b), r = V(a + 1, b), d = V(a, b - 1), u = V(a, b + 1);
      const double vx = (r - l) * inv_2h, vy = (u - d) * inv_2h;
      const double vxx = (r - 2.0 * c + l) * inv_h2, vyy = (u - 2.0 * c + d) * inv_h2;
      const double vxy = (V(a + 1, b + 1) - V(a + 1, b - 1) - V(a - 1, b + 1) + V(a - 1, b - 1)) * inv_4h2;
      acc += c * c + vx * vx + vy * vy + vxx * vxx + 2.0 * vxy * vxy + vyy * vyy;
    }
  return acc * h * h;
}

double member_l2_norm_sq(const ScalarField& f, const SampledMember& mem, const GridGeometry& g) {
  double acc = 0.0;
  for (int b = 0; b < mem.box.nj; ++b)
    for (int a = 0; a < mem.box.ni; ++a) {
      const double w = mem.base[mem.box.local(a, b)];
      if (w == 0.0) continue;
      const double x = w * f[mem.box.global(g, a, b)];
      acc += x * x;
    }
  return acc * g.h * g.h;
}

template <class Fn>
double sup_over_members(const SampledPartition& sp, Fn&& fn) {
  const auto& members = sp.members();
  std::vector<double> parts(members.size(), 0.0);
  parallel_for(members.size(), [&](std::size_t m) { parts[m] = fn(members[m]); });
  double s = 0.0;
  for (double p : parts) {
    if (std::isnan(p)) return p;
    s = std::max(s, p);
  }
  return std::sqrt(s);
}

}  // namespace

double norm_X(const ScalarField& f, const SampledPartition& sp) {
  return sup_over_members(sp, [&](const SampledMember& m) { return member_h2_norm_sq(f, m, sp.geometry()); });
}

double norm_Y(const ScalarField& f, const SampledPartition& sp) {
  return sup_over_members(sp, [&](const SampledMember& m) { return member_l2_norm_sq(f, m, sp.geometry()); });
}

}  // namespace vortexglue
