#pragma once

#include <complex>
#include <vector>

#include "vortexglue/field_grid.hpp"
#include "vortexglue/glue_solver.hpp"

namespace vortexglue {

enum class VortexSign {
  Upper,  // F12 = +(1 - |phi|^2) / (2 delta^2), D1 phi + i D2 phi = 0
  Lower,  // conjugate pair, vortices become antivortices
};

/// Gauge pair reconstructed on the solution grid (rescaled units). The gauge
/// potential is smooth away from the vortices but its phase choice varies from
/// node to node, so only gauge-invariant quantities are tabulated.
struct GaugePair {
  GridGeometry geometry;
  VortexSign sign = VortexSign::Upper;
  std::vector<std::complex<double>> higgs;  // phi at nodes
  std::vector<std::complex<double>> d1;     // covariant derivatives at nodes
  std::vector<std::complex<double>> d2;
  ScalarField f12;                          // rescaled curvature
  std::vector<unsigned char> valid;         // 0 where a stencil would leave a box

  ScalarField modulus_squared() const;
};

GaugePair reconstruct(const Solution& solution, VortexSign sign = VortexSign::Upper);
/// Pair with phi = e^{u/2} for a finite u on its own grid (no vortices).
GaugePair reconstruct_vortex_free(const ScalarField& u, VortexSign sign = VortexSign::Upper);

struct BogomolnyResidual {
  double r1 = 0.0;  // ||D1 phi +/- i D2 phi||_L2, physical units
  double r2 = 0.0;  // ||F12 -/+ (1 - |phi|^2) / (2 delta^2)||_L2, physical units
};
BogomolnyResidual bogomolny_residual(const GaugePair& pair, double delta);

struct EnergyReport {
  double total = 0.0;   // physical energy
  double target = 0.0;  // 2 pi sum m
  ScalarField density;  // physical energy density
};
EnergyReport energy(const GaugePair& pair, const Solution& solution);
EnergyReport energy(const GaugePair& pair, int total_multiplicity);

/// (2 pi)^{-1} * integral of F12.
double flux_number(const GaugePair& pair);

/// Winding of phi along the square loop of nodes at Chebyshev radius `radius`
/// (in nodes) about node (i, j). Periodic images are fixed at (i, j) for the
/// whole loop, so the phase is continuous along it.
int winding_number(const Solution& solution, int i, int j, int radius, VortexSign sign = VortexSign::Upper);

struct DecayAudit {
  double fitted_rate = 0.0;  // slope of ln(1 - |phi|^2) against r_hat
  double fit_r_squared = 0.0;
  double max_ratio = 0.0;    // max |D phi| / (1 - |phi|^2) over the audit region
  double fit_r_min = 0.0;
  double fit_r_max = 0.0;
};
/// Single-vortex decay check. The fit uses r_hat in [r_min, r_max]; the ratio
/// is taken over nodes with r_hat >= 1 that stay `boundary_margin` rescaled
/// units away from a box wall and where 1 - |phi|^2 exceeds `min_gap`. Below
/// that the differenced |D phi| is mostly truncation error.
DecayAudit field_decay_audit(const GaugePair& pair, const Solution& solution, double r_min,
                             double r_max, double boundary_margin = 5.0, double min_gap = 1e-4);

}  // namespace vortexglue
