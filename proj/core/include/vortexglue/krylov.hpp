#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vortexglue/field_grid.hpp"

namespace vortexglue {

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Flexible preconditioned conjugate gradients (Polak-Ribiere update), which
/// tolerates a preconditioner that is itself an inexact iterative solve.
/// `apply` and `precondition` map (in, out) spans of equal length.
template <class Apply, class Precondition>
KrylovResult flexible_pcg(Apply&& apply, Precondition&& precondition, std::span<const double> b,
                          std::span<double> x, double rtol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), z_old(n), p(n), q(n);
  apply(std::span<const double>(x), std::span<double>(q));
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  const double b_norm = std::sqrt(dot(b, b));
  KrylovResult result;
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }
  double r_norm = std::sqrt(dot(r, r));
  result.relative_residual = r_norm / b_norm;
  if (result.relative_residual <= rtol) {
    result.converged = true;
    return result;
  }
  precondition(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    r_norm = std::sqrt(dot(r, r));
    result.iterations = it;
    result.relative_residual = r_norm / b_norm;
    if (!std::isfinite(r_norm)) break;
    if (result.relative_residual <= rtol) {
      result.converged = true;
      break;
    }
    z_old.swap(z);
    precondition(std::span<const double>(r), std::span<double>(z));
    const double rz_new = dot(r, z);
    double r_dz = rz_new;
    for (std::size_t k = 0; k < n; ++k) r_dz -= r[k] * z_old[k];
    const double beta = std::max(0.0, r_dz / rz);
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  return result;
}

}  // namespace vortexglue
