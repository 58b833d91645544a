#include "vortexglue/ansatz.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "vortexglue/errors.hpp"
#include "vortexglue/parallel.hpp"

namespace vortexglue {

ProfileSet compute_profiles(const VortexConfiguration& config, double r_max, double tol) {
  std::set<int> ms;
  for (const auto& v : config.vortices) ms.insert(v.multiplicity);
  std::vector<int> list(ms.begin(), ms.end());
  std::vector<std::shared_ptr<const RadialProfile>> built(list.size());
  parallel_for(list.size(), [&](std::size_t k) {
    built[k] = std::make_shared<const RadialProfile>(solve_radial_profile(list[k], r_max, tol));
  });
  ProfileSet set;
  for (std::size_t k = 0; k < list.size(); ++k) set[list[k]] = built[k];
  return set;
}

AnsatzBackground::AnsatzBackground(const VortexConfiguration& config, ProfileSet profiles, double h_target)
    : config_(config), profiles_(std::move(profiles)) {
  partition_ = std::make_shared<const PartitionOfUnity>(PartitionOfUnity::build(config_));
  geometry_ = GridGeometry::for_domain(config_.domain, config_.delta, h_target);
  sampled_ = std::make_unique<SampledPartition>(partition_, geometry_);
  for (const auto& v : config_.vortices)
    if (!profiles_.count(v.multiplicity))
      throw ConfigError("ansatz: no radial profile for multiplicity " + std::to_string(v.multiplicity));

  weight_ = ScalarField(geometry_, 1.0);
  residual_zero_ = ScalarField(geometry_, 0.0);
  smooth_part_ = ScalarField(geometry_, 0.0);
  log_part_ = ScalarField(geometry_, 0.0);
  const int V = static_cast<int>(config_.vortices.size());
  cutoffs_.resize(V);

  // Patches have disjoint supports, so each node is written by at most one vortex.
  parallel_for(static_cast<std::size_t>(V), [&](std::size_t jv) {
    const int j = static_cast<int>(jv);
    const int m = config_.vortices[j].multiplicity;
    const RadialProfile& prof = *profiles_.at(m);
    PatchCutoff& cut = cutoffs_[j];
    cut.box = index_box(geometry_, partition_->support_box(PartitionKind::Phi, j));
    const std::size_t n = cut.box.size();
    cut.value.assign(n, 0.0);
    cut.dx.assign(n, 0.0);
    cut.dy.assign(n, 0.0);
    cut.laplacian.assign(n, 0.0);
    const int offset = geometry_.boundary == Boundary::Periodic ? 0 : 1;
    for (int b = 0; b < cut.box.nj; ++b) {
      for (int a = 0; a < cut.box.ni; ++a) {
        const Vec2 x((cut.box.i0 + a + offset) * geometry_.h, (cut.box.j0 + b + offset) * geometry_.h);
        const Jet jet = partition_->eval(x, PartitionKind::Phi, j, 2);
        const std::size_t k = cut.box.local(a, b);
        cut.value[k] = jet.value;
        cut.dx[k] = jet.gradient.x();
        cut.dy[k] = jet.gradient.y();
        cut.laplacian[k] = jet.laplacian();
        if (jet.value == 0.0) continue;

        const std::size_t node = cut.box.global(geometry_, a, b);
        Vec2 d = offset_of(j, x);
        double r = d.norm();
        if (r < 1e-9 * geometry_.h) {  // node sits on the vortex up to rounding
          r = 0.0;
          d.setZero();
        }
        const ProfileSample s = eval_profile(prof, r);
        const double phi = jet.value;
        smooth_part_[node] = phi * s.w;
        if (r == 0.0) {
          weight_[node] = 0.0;
          log_part_[node] = -std::numeric_limits<double>::infinity();
          // phi == 1 here, so F(0) = (1 - e^U) + (W - 1) = 1 - 1 = 0 at the node.
          residual_zero_[node] = 0.0;
          continue;
        }
        const double log_r = std::log(r);
        log_part_[node] = phi * 2.0 * m * log_r;
        const double phiU = phi * 2.0 * m * log_r + phi * s.w;
        weight_[node] = std::exp(phiU);
        double commutator = 0.0;
        const double grad_dot = jet.gradient.dot(d) / r;
        if (grad_dot != 0.0 || jet.laplacian() != 0.0)
          commutator = 2.0 * s.U_prime * grad_dot + s.U * jet.laplacian();
        residual_zero_[node] = phi * s.one_minus_exp_U - commutator + std::expm1(phiU);
      }
    }
  });
}

const RadialProfile& AnsatzBackground::profile(int multiplicity) const {
  const auto it = profiles_.find(multiplicity);
  if (it == profiles_.end()) throw ConfigError("no profile for multiplicity " + std::to_string(multiplicity));
  return *it->second;
}

Vec2 AnsatzBackground::center(int j) const { return config_.vortices[j].position / config_.delta; }

Vec2 AnsatzBackground::offset(int j, const Vec2& x_hat) const { return offset_of(j, x_hat); }

Vec2 AnsatzBackground::offset_of(int j, const Vec2& x_hat) const {
  const double delta = config_.delta;
  return config_.domain.displacement(config_.vortices[j].position, x_hat * delta) / delta;
}

}  // namespace vortexglue
