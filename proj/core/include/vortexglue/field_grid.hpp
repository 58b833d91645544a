#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vortexglue/vortex_config.hpp"

namespace vortexglue {

enum class Frame { Rescaled, Physical };

/// Uniform node grid over a domain in rescaled coordinates x_hat = x / delta.
/// Periodic grids have nodes i*h, i = 0..nx-1. Dirichlet grids carry only the
/// interior nodes (i+1)*h of a box of side (nx+1)*h.
struct GridGeometry {
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  double delta = 1.0;
  Boundary boundary = Boundary::Periodic;

  /// Spacing is the largest value <= h_target that fits the domain exactly.
  static GridGeometry for_domain(const Domain& domain, double delta, double h_target);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x(int i) const { return boundary == Boundary::Periodic ? i * h : (i + 1) * h; }
  double y(int j) const { return boundary == Boundary::Periodic ? j * h : (j + 1) * h; }
  Vec2 point(int i, int j) const { return {x(i), y(j)}; }
  /// Rescaled domain extent.
  double extent_x() const { return boundary == Boundary::Periodic ? nx * h : (nx + 1) * h; }
  double extent_y() const { return boundary == Boundary::Periodic ? ny * h : (ny + 1) * h; }
  double cell_area() const { return h * h; }
  bool operator==(const GridGeometry&) const = default;
};

class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(const GridGeometry& geometry, double fill = 0.0)
      : geometry_(geometry), values_(geometry.size(), fill) {}

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t size() const { return values_.size(); }
  double& operator()(int i, int j) { return values_[geometry_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[geometry_.index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  /// Value at a possibly out-of-range node: wrapped on a torus, zero outside a box.
  double at(int i, int j) const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// Five-point Laplacian Delta_h f (rescaled units), zero Dirichlet data on boxes.
ScalarField laplacian(const ScalarField& f);

/// out = -Delta_h v + potential * v on grid g (potential may be empty for zero).
void apply_schrodinger(const GridGeometry& g, std::span<const double> potential,
                       std::span<const double> v, std::span<double> out);

/// sum f * h^2.
double integrate(const ScalarField& f);
double sup_norm(const ScalarField& f);
/// Euclidean inner product of node values.
double dot(std::span<const double> a, std::span<const double> b);

/// Solves (shift - Delta_h) u = rhs exactly by a sine or Fourier transform.
/// Thread-safe: plans are shared, work buffers are per call.
class SpectralHelmholtz {
public:
  SpectralHelmholtz(int nx, int ny, double h, Boundary boundary, double shift = 1.0);
  ~SpectralHelmholtz();
  SpectralHelmholtz(const SpectralHelmholtz&) = delete;
  SpectralHelmholtz& operator=(const SpectralHelmholtz&) = delete;

  void solve(std::span<const double> rhs, std::span<double> out) const;

private:
  struct Plans;
  int nx_, ny_;
  Boundary boundary_;
  std::vector<double> inverse_symbol_;
  Plans* plans_;
};

/// (1 - Delta_h)^{-1} rhs on the field's own grid.
ScalarField helmholtz_solve(const ScalarField& rhs);

}  // namespace vortexglue
