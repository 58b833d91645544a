#pragma once

#include <memory>
#include <vector>

#include "vortexglue/field_grid.hpp"
#include "vortexglue/partition.hpp"

namespace vortexglue {

/// Rectangle of node indices [i0, i0 + ni) x [j0, j0 + nj). On a torus the
/// indices wrap; on a box they are already clipped to the grid.
struct IndexBox {
  int i0 = 0;
  int j0 = 0;
  int ni = 0;
  int nj = 0;

  std::size_t size() const { return static_cast<std::size_t>(ni) * static_cast<std::size_t>(nj); }
  std::size_t local(int a, int b) const { return static_cast<std::size_t>(b) * ni + a; }
  /// Grid index of local node (a, b).
  std::size_t global(const GridGeometry& g, int a, int b) const;
  IndexBox grown(int margin, const GridGeometry& g) const;
};

/// Node box covering a physical-coordinate rectangle.
IndexBox index_box(const GridGeometry& g, const std::array<double, 4>& physical_box);

/// One partition member tabulated on its support box: the plain function
/// (phi_j or psi_k) and its normalised companion (g_j or h_k).
struct SampledMember {
  PartitionKind kind = PartitionKind::Phi;  // Phi or Psi
  int index = 0;
  IndexBox box;
  std::vector<double> base;
  std::vector<double> normalized;
};

/// Partition members sampled on a grid; vortex members first, then leftover cells.
class SampledPartition {
public:
  SampledPartition(std::shared_ptr<const PartitionOfUnity> partition, const GridGeometry& geometry);

  const PartitionOfUnity& partition() const { return *partition_; }
  std::shared_ptr<const PartitionOfUnity> partition_ptr() const { return partition_; }
  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<SampledMember>& members() const { return members_; }
  const SampledMember& vortex_member(int j) const { return members_[j]; }
  const SampledMember& leftover_member(int k) const {
    return members_[partition_->vortex_count() + k];
  }

private:
  std::shared_ptr<const PartitionOfUnity> partition_;
  GridGeometry geometry_;
  std::vector<SampledMember> members_;
};

/// sup over members of the discrete H^2 norm of (member * f), mixed
/// derivatives included.
double norm_X(const ScalarField& f, const SampledPartition& partition);
/// sup over members of the L^2 norm of (member * f).
double norm_Y(const ScalarField& f, const SampledPartition& partition);

}  // namespace vortexglue
