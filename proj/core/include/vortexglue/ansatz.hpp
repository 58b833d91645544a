#pragma once

#include <map>
#include <memory>
#include <vector>

#include "vortexglue/field_grid.hpp"
#include "vortexglue/partition.hpp"
#include "vortexglue/radial_profile.hpp"
#include "vortexglue/sampled_partition.hpp"
#include "vortexglue/vortex_config.hpp"

namespace vortexglue {

/// Radial profiles keyed by multiplicity.
using ProfileSet = std::map<int, std::shared_ptr<const RadialProfile>>;

/// Solves the radial problem once for every multiplicity in the configuration.
ProfileSet compute_profiles(const VortexConfiguration& config, double r_max = 30.0,
                            double tol = 1e-9);

/// phi_j and its rescaled derivatives tabulated over the support box of patch j.
struct PatchCutoff {
  IndexBox box;
  std::vector<double> value;
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<double> laplacian;
};

/// Everything about b = sum_j phi_j U_j that the nonlinear solve needs, in
/// rescaled coordinates. The residual at z = 0 is assembled analytically from
/// the profiles, so no finite differences touch the logarithmic singularity.
class AnsatzBackground {
public:
  AnsatzBackground(const VortexConfiguration& config, ProfileSet profiles, double h_target);

  const VortexConfiguration& config() const { return config_; }
  const GridGeometry& geometry() const { return geometry_; }
  const PartitionOfUnity& partition() const { return *partition_; }
  std::shared_ptr<const PartitionOfUnity> partition_ptr() const { return partition_; }
  const SampledPartition& sampled() const { return *sampled_; }
  const RadialProfile& profile(int multiplicity) const;
  const ProfileSet& profiles() const { return profiles_; }

  /// W = exp(b); exactly zero at vortex nodes.
  const ScalarField& weight() const { return weight_; }
  /// F(0) = sum phi (1 - e^U) - C + (W - 1), with C = sum 2 grad phi . grad U + U Lap phi.
  const ScalarField& residual_at_zero() const { return residual_zero_; }
  /// Smooth part sum phi_j w_j of b.
  const ScalarField& smooth_part() const { return smooth_part_; }
  /// Singular part sum phi_j 2 m_j ln r_j; -infinity at vortex nodes.
  const ScalarField& log_part() const { return log_part_; }
  const PatchCutoff& cutoff(int j) const { return cutoffs_[j]; }

  /// Rescaled vortex centre.
  Vec2 center(int j) const;
  /// Rescaled minimum-image displacement x_hat - p_hat_j.
  Vec2 offset(int j, const Vec2& x_hat) const;

private:
  Vec2 offset_of(int j, const Vec2& x_hat) const;

  VortexConfiguration config_;
  ProfileSet profiles_;
  GridGeometry geometry_;
  std::shared_ptr<const PartitionOfUnity> partition_;
  std::unique_ptr<SampledPartition> sampled_;
  ScalarField weight_;
  ScalarField residual_zero_;
  ScalarField smooth_part_;
  ScalarField log_part_;
  std::vector<PatchCutoff> cutoffs_;
};

}  // namespace vortexglue
