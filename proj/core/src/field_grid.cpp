#include "vortexglue/field_grid.hpp"

#include <algorithm>
#include <cmath>

#include "vortexglue/errors.hpp"

namespace vortexglue {

GridGeometry GridGeometry::for_domain(const Domain& domain, double delta, double h_target) {
  if (!(delta > 0.0) || !(h_target > 0.0)) throw ConfigError("grid: delta and h must be positive");
  const double Lx = domain.lx / delta, Ly = domain.ly / delta;
  GridGeometry g;
  g.delta = delta;
  g.boundary = domain.boundary;
  int cells = std::max(2, static_cast<int>(std::ceil(Lx / h_target - 1e-9)));
  for (int tries = 0;; ++tries, ++cells) {
    if (tries > 100000) throw ConfigError("grid: domain sides are not commensurate with any spacing");
    const double h = Lx / cells;
    const double q = Ly / h;
    if (std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q)) {
      g.h = h;
      const int cy = static_cast<int>(std::llround(q));
      if (domain.boundary == Boundary::Periodic) {
        g.nx = cells;
        g.ny = cy;
      } else {
        g.nx = cells - 1;
        g.ny = cy - 1;
      }
      break;
    }
  }
  if (g.nx < 3 || g.ny < 3) throw ConfigError("grid: fewer than 3 nodes per side");
  const double max_nodes = 4e8;
  if (static_cast<double>(g.nx) * g.ny > max_nodes) throw ConfigError("grid: too many nodes");
  return g;
}

double ScalarField::at(int i, int j) const {
  const auto& g = geometry_;
  if (g.boundary == Boundary::Periodic) {
    i = ((i % g.nx) + g.nx) % g.nx;
    j = ((j % g.ny) + g.ny) % g.ny;
    return values_[g.index(i, j)];
  }
  if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return 0.0;
  return values_[g.index(i, j)];
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField laplacian(const ScalarField& f) {
  const GridGeometry& g = f.geometry();
  ScalarField out(g);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const bool periodic = g.boundary == Boundary::Periodic;
  const int nx = g.nx, ny = g.ny;
  const double* v = f.data().data();
  double* o = out.data().data();
  for (int j = 0; j < ny; ++j) {
    const double* row = v + static_cast<std::size_t>(j) * nx;
    const double* down = nullptr;
    const double* up = nullptr;
    if (j > 0) down = row - nx;
    else if (periodic) down = v + static_cast<std::size_t>(ny - 1) * nx;
    if (j + 1 < ny) up = row + nx;
    else if (periodic) up = v;
    double* orow = o + static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      double left, right;
      if (i > 0) left = row[i - 1];
      else left = periodic ? row[nx - 1] : 0.0;
      if (i + 1 < nx) right = row[i + 1];
      else right = periodic ? row[0] : 0.0;
      const double d = down ? down[i] : 0.0;
      const double u = up ? up[i] : 0.0;
      orow[i] = (left + right + d + u - 4.0 * row[i]) * inv_h2;
    }
  }
  return out;
}

void apply_schrodinger(const GridGeometry& g, std::span<const double> potential,
                       std::span<const double> v, std::span<double> out) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  const bool periodic = g.boundary == Boundary::Periodic;
  const bool has_potential = !potential.empty();
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const bool has_down = j > 0 || periodic, has_up = j + 1 < ny || periodic;
    const std::size_t down = j > 0 ? row - nx : static_cast<std::size_t>(ny - 1) * nx;
    const std::size_t up = j + 1 < ny ? row + nx : 0;
    for (int i = 0; i < nx; ++i) {
      const double c = v[row + i];
      double s = -4.0 * c;
      if (i > 0) s += v[row + i - 1];
      else if (periodic) s += v[row + nx - 1];
      if (i + 1 < nx) s += v[row + i + 1];
      else if (periodic) s += v[row];
      if (has_down) s += v[down + i];
      if (has_up) s += v[up + i];
      double value = -s * inv_h2;
      if (has_potential) value += potential[row + i] * c;
      out[row + i] = value;
    }
  }
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data()) s += v;
  return s * f.geometry().cell_area();
}

double sup_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data()) {
    if (std::isnan(v)) return v;
    s = std::max(s, std::abs(v));
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace vortexglue
