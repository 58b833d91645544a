#pragma once

#include <filesystem>
#include <vector>

namespace vortexglue {

/// Discretisation of the radial solve: Chebyshev-Lobatto elements of fixed
/// polynomial order, width `inner_width` on [0, inner_radius] and
/// `outer_width` beyond.
struct RadialResolution {
  int order = 14;
  double inner_width = 0.5;
  double inner_radius = 10.0;
  double outer_width = 1.0;

  RadialResolution refined() const;
};

/// Radially symmetric vortex of multiplicity N stored through its regular
/// part w = U - 2N ln r. Beyond r_max the profile continues as A * K0(r).
struct RadialProfile {
  int multiplicity = 0;
  double r_max = 0.0;
  double tolerance = 0.0;
  RadialResolution resolution;
  std::vector<double> breakpoints;  // element edges, 0 = b_0 < ... < b_E = r_max
  std::vector<double> nodes;        // collocation radii, interfaces stored once
  std::vector<double> w;
  std::vector<double> w_prime;
  double tail_amplitude = 0.0;
  double decay_C = 0.0;
  double decay_alpha = 1.0;
  double max_residual = 0.0;  // ODE residual sampled between nodes
  int newton_iterations = 0;
};

/// Value of the profile at one radius. At r = 0 the singular part is
/// -infinity for N > 0 and only w, w' are meaningful.
struct ProfileSample {
  double U = 0.0;
  double U_prime = 0.0;
  double w = 0.0;
  double w_prime = 0.0;
  double one_minus_exp_U = 0.0;
};

RadialProfile solve_radial_profile(int N, double r_max, double tol,
                                   const RadialResolution& resolution = {});

ProfileSample eval_profile(const RadialProfile& profile, double r);

/// 2 pi * integral of (1 - e^U) r dr over [0, infinity), tail included.
double profile_flux(const RadialProfile& profile);

struct ModeEigenvalue {
  int l = 0;
  double lambda_min = 0.0;
};

/// Smallest eigenvalue of -d2/dr2 - (1/r) d/dr + l^2/r^2 + e^U on (0, r_max)
/// with a Dirichlet outer wall, for l = 0..l_max.
std::vector<ModeEigenvalue> check_nondegeneracy(const RadialProfile& profile, int l_max,
                                                double r_max, int grid_points = 3000);

/// Writes r,w,w_prime as CSV plus a JSON sidecar carrying the element
/// layout and decay constants, enough to rebuild the interpolant exactly.
void save_profile(const RadialProfile& profile, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path);
RadialProfile load_profile(const std::filesystem::path& csv_path,
                           const std::filesystem::path& json_path);

}  // namespace vortexglue
