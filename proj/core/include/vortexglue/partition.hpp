#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vortexglue/vortex_config.hpp"

namespace vortexglue {

/// Which family of partition functions to evaluate.
enum class PartitionKind {
  Phi,  // vortex patch phi_j
  Psi,  // leftover cell psi_k
  G,    // normalised vortex patch g_j
  H,    // normalised leftover cell h_k
};

struct Jet {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();

  double laplacian() const { return hessian.trace(); }
};

struct CellIndex {
  int i = 0;
  int j = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Members active at a point: vortex indices J and leftover-cell indices K.
struct ActiveSet {
  std::vector<int> vortices;
  std::vector<int> cells;
};

/// Smooth partition of unity on the lattice r0 * Z^2. Each lattice cell
/// carries a tensor-product bump with plateau on |t| <= 1/4 and support
/// |t| < 3/4 (t in units of r0); the bumps sum to one. Cells near a vortex are
/// grouped into that vortex's patch, the rest are leftover cells.
class PartitionOfUnity {
public:
  static PartitionOfUnity build(const VortexConfiguration& config);

  const VortexConfiguration& config() const { return config_; }
  double r0() const { return r0_; }
  double delta() const { return config_.delta; }
  int cells_x() const { return cells_x_; }
  int cells_y() const { return cells_y_; }
  int vortex_count() const { return static_cast<int>(vortex_cells_.size()); }
  int leftover_count() const { return static_cast<int>(leftover_cells_.size()); }

  /// N_j: the cells grouped into vortex j.
  const std::vector<CellIndex>& vortex_cells(int j) const { return vortex_cells_[j]; }
  /// I(k): the lattice cell of leftover member k.
  CellIndex leftover_cell(int k) const { return leftover_cells_[k]; }

  /// Physical radius of the largest disc about vortex j on which phi_j == 1.
  double core_radius(int j) const { return core_radius_[j]; }
  /// Worst-case number of members overlapping at a single point.
  int max_active() const { return max_active_; }
  Vec2 cell_center(CellIndex c) const;

  /// Bounding box, physical coordinates, of the support of a member. On a
  /// torus the box may extend past [0, L] and is meant to be wrapped.
  std::array<double, 4> support_box(PartitionKind kind, int index) const;

  /// Physical-coordinate jet. `order` 0 fills the value only, 1 adds the
  /// gradient, 2 the Hessian.
  Jet eval_physical(const Vec2& x, PartitionKind kind, int index, int order = 2) const;
  /// Same, in rescaled coordinates x_hat = x / delta.
  Jet eval(const Vec2& x_hat, PartitionKind kind, int index, int order = 2) const;

  ActiveSet active_indices_physical(const Vec2& x) const;
  ActiveSet active_indices(const Vec2& x_hat) const;

  std::string summary_json() const;

private:
  struct CellJet {
    int owner;  // vortex index, or vortex_count + leftover index
    Jet jet;
  };
  // Every lattice cell whose bump is nonzero at x, with its jet.
  int active_cells(const Vec2& x, int order, std::array<CellJet, 16>& out) const;
  int cell_owner(int i, int j) const { return owner_[static_cast<std::size_t>(j) * cells_x_ + i]; }
  bool build_cells();

  VortexConfiguration config_;
  double r0_ = 0.0;
  int cells_x_ = 0;
  int cells_y_ = 0;
  std::vector<int> owner_;
  std::vector<std::vector<CellIndex>> vortex_cells_;
  std::vector<CellIndex> leftover_cells_;
  std::vector<double> core_radius_;
  int max_active_ = 0;
};

/// One-dimensional bump with its first two derivatives.
struct BumpJet {
  double value;
  double d1;
  double d2;
};
BumpJet lattice_bump(double t);

}  // namespace vortexglue
