#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace vortexglue {

using Vec2 = Eigen::Vector2d;

enum class Boundary { Periodic, Dirichlet };

/// Rectangle [0, lx] x [0, ly] in physical units; periodic means a flat torus.
struct Domain {
  Boundary boundary = Boundary::Periodic;
  double lx = 1.0;
  double ly = 1.0;

  double area() const { return lx * ly; }
  /// Minimum-image displacement b - a on a torus, plain difference on a box.
  Vec2 displacement(const Vec2& a, const Vec2& b) const;
  double distance(const Vec2& a, const Vec2& b) const { return displacement(a, b).norm(); }
  double distance_to_boundary(const Vec2& p) const;
};

struct Vortex {
  Vec2 position = Vec2::Zero();
  int multiplicity = 1;
};

struct VortexConfiguration {
  Domain domain;
  std::vector<Vortex> vortices;
  double delta = 0.1;
  std::optional<double> r0;  // cell size override

  int total_multiplicity() const;
  int max_multiplicity() const;
  /// Smallest distance between distinct vortices, including a vortex and its
  /// own periodic images on a torus. Infinite for a lone vortex in a box.
  double min_separation() const;
  /// Throws ConfigError listing every violation found.
  void validate() const;
  /// 4 pi delta^2 sum m < |Omega| is necessary for a solution to exist.
  bool satisfies_area_bound() const;
};

}  // namespace vortexglue
