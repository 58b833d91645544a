#include "vortexglue/vortex_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vortexglue/errors.hpp"

namespace vortexglue {

Vec2 Domain::displacement(const Vec2& a, const Vec2& b) const {
  Vec2 d = b - a;
  if (boundary == Boundary::Periodic) {
    d.x() -= lx * std::round(d.x() / lx);
    d.y() -= ly * std::round(d.y() / ly);
  }
  return d;
}

double Domain::distance_to_boundary(const Vec2& p) const {
  if (boundary == Boundary::Periodic) return std::numeric_limits<double>::infinity();
  return std::min({p.x(), lx - p.x(), p.y(), ly - p.y()});
}

int VortexConfiguration::total_multiplicity() const {
  int total = 0;
  for (const auto& v : vortices) total += v.multiplicity;
  return total;
}

int VortexConfiguration::max_multiplicity() const {
  int m = 0;
  for (const auto& v : vortices) m = std::max(m, v.multiplicity);
  return m;
}

double VortexConfiguration::min_separation() const {
  double d = std::numeric_limits<double>::infinity();
  if (domain.boundary == Boundary::Periodic && !vortices.empty()) d = std::min(domain.lx, domain.ly);
  for (std::size_t a = 0; a < vortices.size(); ++a)
    for (std::size_t b = a + 1; b < vortices.size(); ++b)
      d = std::min(d, domain.distance(vortices[a].position, vortices[b].position));
  return d;
}

bool VortexConfiguration::satisfies_area_bound() const {
  return 4.0 * std::numbers::pi * delta * delta * total_multiplicity() < domain.area();
}

void VortexConfiguration::validate() const {
  std::ostringstream errs;
  if (!(domain.lx > 0.0) || !(domain.ly > 0.0)) errs << "domain sides must be positive; ";
  if (!(delta > 0.0)) errs << "delta must be positive; ";
  if (r0 && !(*r0 > 0.0)) errs << "r0 must be positive; ";
  if (vortices.empty()) errs << "at least one vortex is required; ";
  for (std::size_t k = 0; k < vortices.size(); ++k) {
    const auto& v = vortices[k];
    if (v.multiplicity < 1) errs << "vortex " << k << " has multiplicity " << v.multiplicity << " < 1; ";
    const Vec2& p = v.position;
    if (!std::isfinite(p.x()) || !std::isfinite(p.y()) || p.x() < 0.0 || p.y() < 0.0 ||
        p.x() > domain.lx || p.y() > domain.ly)
      errs << "vortex " << k << " lies outside the domain; ";
    else if (domain.boundary == Boundary::Dirichlet && domain.distance_to_boundary(p) <= 0.0)
      errs << "vortex " << k << " lies on the boundary; ";
  }
  for (std::size_t a = 0; a < vortices.size(); ++a)
    for (std::size_t b = a + 1; b < vortices.size(); ++b)
      if (domain.distance(vortices[a].position, vortices[b].position) == 0.0)
        errs << "vortices " << a << " and " << b << " coincide (separation d must be > 0; merge them into one multiplicity); ";
  const std::string msg = errs.str();
  if (!msg.empty()) throw ConfigError("invalid vortex configuration: " + msg.substr(0, msg.size() - 2));
}

}  // namespace vortexglue
