#pragma once

#include <memory>
#include <vector>

#include "vortexglue/ansatz.hpp"
#include "vortexglue/field_grid.hpp"

namespace vortexglue {

/// Glued approximate inverse of L = -Delta + W:
///   S f = sum_j g_j Lj^{-1}(g_j f) + sum_k h_k L0^{-1}(h_k f),
/// where Lj = -Delta + e^{U_j} is solved on an enlarged Dirichlet patch around
/// vortex j and L0 = 1 - Delta on the whole grid. Leftover cells are grouped
/// into colour classes of pairwise disjoint supports, one global solve each.
class ApproximateInverse {
public:
  struct Options {
    double patch_margin = 2.0;  // rescaled units added around each vortex patch
    double inner_tol = 1e-10;
    int inner_max_iter = 500;
  };

  explicit ApproximateInverse(std::shared_ptr<const AnsatzBackground> background);
  ApproximateInverse(std::shared_ptr<const AnsatzBackground> background, Options options);
  ~ApproximateInverse();

  ScalarField apply(const ScalarField& f) const;
  void apply(std::span<const double> f, std::span<double> out) const;

  int colour_count() const { return static_cast<int>(colours_.size()); }
  /// Largest inner iteration count seen in any patch solve so far.
  int max_inner_iterations() const;

private:
  struct Patch;
  std::shared_ptr<const AnsatzBackground> background_;
  Options options_;
  std::vector<std::unique_ptr<Patch>> patches_;
  std::vector<std::vector<int>> colours_;
  std::unique_ptr<SpectralHelmholtz> global_;
};

}  // namespace vortexglue
