#pragma once

#include <limits>
#include <map>
#include <memory>

#include <doctest.h>

#include "vortexglue/ansatz.hpp"
#include "vortexglue/glue_solver.hpp"

namespace vortexglue::testing {

// Relative comparison; doctest's default scale of 1 turns small values into an absolute test.
inline doctest::Approx rel(double value, double eps) { return doctest::Approx(value).epsilon(eps).scale(std::numeric_limits<double>::min()); }

// Two unit vortices on a 4 x 2 torus.
inline VortexConfiguration reference_torus(double delta) {
  VortexConfiguration c;
  c.domain = {Boundary::Periodic, 4.0, 2.0};
  c.vortices = {{Vec2(0.75, 0.75), 1}, {Vec2(2.75, 0.75), 1}};
  c.delta = delta;
  return c;
}

// Same shape at a quarter of the area, for cheap solves.
inline VortexConfiguration small_torus(double delta) {
  VortexConfiguration c;
  c.domain = {Boundary::Periodic, 2.0, 1.0};
  c.vortices = {{Vec2(0.375, 0.375), 1}, {Vec2(1.375, 0.375), 1}};
  c.delta = delta;
  return c;
}

inline VortexConfiguration single_box(double side, double delta) {
  VortexConfiguration c;
  c.domain = {Boundary::Dirichlet, side, side};
  c.vortices = {{Vec2(side / 2, side / 2), 1}};
  c.delta = delta;
  return c;
}

// Profiles are expensive, so every test in a binary shares them.
inline ProfileSet profiles(std::initializer_list<int> ms) {
  static std::map<int, std::shared_ptr<const RadialProfile>> store;
  ProfileSet set;
  for (int m : ms) {
    auto& p = store[m];
    if (!p) p = std::make_shared<const RadialProfile>(solve_radial_profile(m, 30.0, 1e-9));
    set[m] = p;
  }
  return set;
}

inline ProfileSet profiles_for(const VortexConfiguration& c) {
  ProfileSet set;
  for (const auto& v : c.vortices) set[v.multiplicity] = profiles({v.multiplicity}).at(v.multiplicity);
  return set;
}

}  // namespace vortexglue::testing
