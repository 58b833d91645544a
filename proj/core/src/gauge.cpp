#include "vortexglue/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vortexglue/errors.hpp"
#include "vortexglue/fit.hpp"

namespace vortexglue {
namespace {

using cplx = std::complex<double>;

// phi_j at node (i, j), zero outside the patch box.
double cutoff_at(const PatchCutoff& cut, const GridGeometry& g, int i, int j) {
  int a = i - cut.box.i0, b = j - cut.box.j0;
  if (g.boundary == Boundary::Periodic) {
    a = ((a % g.nx) + g.nx) % g.nx;
    b = ((b % g.ny) + g.ny) % g.ny;
  }
  if (a < 0 || b < 0 || a >= cut.box.ni || b >= cut.box.nj) return 0.0;
  return cut.value[cut.box.local(a, b)];
}

struct VortexTerm {
  int m;
  Vec2 offset;  // image chosen at the stencil centre
};

// Works in the holomorphic gauge phi = e^{v/2} prod (x - p_j)^{m_j},
// A = (d2 v, -d1 v) / 2, where v = u - sum m_j ln |x - p_j|^2 is regular. Each
// stencil fixes one periodic image per vortex at its centre node.
class Reconstructor {
public:
  explicit Reconstructor(const Solution& s) : bg_(s.background.get()), g_(s.geometry()), us_(s.u_smooth()) {}
  explicit Reconstructor(const ScalarField& u) : bg_(nullptr), g_(u.geometry()), us_(u) {}

  void centre_terms(int i, int j, std::vector<VortexTerm>& terms) const {
    terms.clear();
    if (!bg_) return;
    const Vec2 x = g_.point(i, j);
    for (std::size_t v = 0; v < bg_->config().vortices.size(); ++v) {
      Vec2 d = bg_->offset(static_cast<int>(v), x);
      if (d.norm() < 1e-9 * g_.h) d.setZero();
      terms.push_back({bg_->config().vortices[v].multiplicity, d});
    }
  }

  // v at node (i + di, j + dj) with the centre's image choice.
  double regular(int i, int j, int di, int dj, const std::vector<VortexTerm>& terms) const {
    const Vec2 shift(di * g_.h, dj * g_.h);
    double value = us_.at(i + di, j + dj);
    for (std::size_t v = 0; v < terms.size(); ++v) {
      const double phi = cutoff_at(bg_->cutoff(static_cast<int>(v)), g_, i + di, j + dj);
      if (phi == 1.0) continue;
      value += terms[v].m * (phi - 1.0) * std::log((terms[v].offset + shift).squaredNorm());
    }
    return value;
  }

  cplx higgs(int i, int j, int di, int dj, const std::vector<VortexTerm>& terms) const {
    const Vec2 shift(di * g_.h, dj * g_.h);
    cplx value = std::exp(0.5 * regular(i, j, di, dj, terms));
    for (const auto& t : terms) {
      const Vec2 d = t.offset + shift;
      const cplx z(d.x(), d.y());
      for (int k = 0; k < t.m; ++k) value *= z;
    }
    return value;
  }

  GaugePair run(VortexSign sign) const {
    GaugePair pair;
    pair.geometry = g_;
    pair.sign = sign;
    const std::size_t n = g_.size();
    pair.higgs.assign(n, 0.0);
    pair.d1.assign(n, 0.0);
    pair.d2.assign(n, 0.0);
    pair.f12 = ScalarField(g_);
    pair.valid.assign(n, 1);
    const bool box = g_.boundary == Boundary::Dirichlet;
    const double inv_2h = 0.5 / g_.h;
    std::vector<VortexTerm> terms;
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) {
        const std::size_t k = g_.index(i, j);
        centre_terms(i, j, terms);
        const cplx phi = higgs(i, j, 0, 0, terms);
        pair.higgs[k] = phi;
        if (box && (i == 0 || j == 0 || i == g_.nx - 1 || j == g_.ny - 1)) {
          pair.valid[k] = 0;
          continue;
        }
        auto v = [&](int di, int dj) { return regular(i, j, di, dj, terms); };
        const double v0 = v(0, 0);
        const double vx = (v(1, 0) - v(-1, 0)) * inv_2h;
        const double vy = (v(0, 1) - v(0, -1)) * inv_2h;
        const Vec2 A(0.5 * vy, -0.5 * vx);
        const cplx dphi1 = (higgs(i, j, 1, 0, terms) - higgs(i, j, -1, 0, terms)) * inv_2h;
        const cplx dphi2 = (higgs(i, j, 0, 1, terms) - higgs(i, j, 0, -1, terms)) * inv_2h;
        pair.d1[k] = dphi1 - cplx(0.0, A.x()) * phi;
        pair.d2[k] = dphi2 - cplx(0.0, A.y()) * phi;
        // curl of the centred A at the four neighbours: -Lap v / 2 on the 2h stencil
        pair.f12[k] = -0.5 * (v(2, 0) + v(-2, 0) + v(0, 2) + v(0, -2) - 4.0 * v0) / (4.0 * g_.h * g_.h);
      }
    if (sign == VortexSign::Lower) {
      for (std::size_t k = 0; k < n; ++k) {
        pair.higgs[k] = std::conj(pair.higgs[k]);
        pair.d1[k] = std::conj(pair.d1[k]);
        pair.d2[k] = std::conj(pair.d2[k]);
        pair.f12[k] = -pair.f12[k];
      }
    }
    return pair;
  }

private:
  const AnsatzBackground* bg_;
  GridGeometry g_;
  ScalarField us_;
};

}  // namespace

ScalarField GaugePair::modulus_squared() const {
  ScalarField out(geometry);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(higgs[k]);
  return out;
}

GaugePair reconstruct(const Solution& solution, VortexSign sign) {
  return Reconstructor(solution).run(sign);
}

GaugePair reconstruct_vortex_free(const ScalarField& u, VortexSign sign) {
  for (double x : u.data())
    if (!std::isfinite(x)) throw ConfigError("reconstruct_vortex_free: u must be finite");
  return Reconstructor(u).run(sign);
}

BogomolnyResidual bogomolny_residual(const GaugePair& pair, double delta) {
  const double s = pair.sign == VortexSign::Upper ? 1.0 : -1.0;
  const cplx i_s(0.0, s);
  double a1 = 0.0, a2 = 0.0;
  for (std::size_t k = 0; k < pair.higgs.size(); ++k) {
    if (!pair.valid[k]) continue;
    a1 += std::norm(pair.d1[k] + i_s * pair.d2[k]);
    const double e = pair.f12[k] - s * 0.5 * (1.0 - std::norm(pair.higgs[k]));
    a2 += e * e;
  }
  const double area = pair.geometry.cell_area();
  // Rescaled L2 norms; the curvature carries one extra 1/delta in physical units.
  return {std::sqrt(a1 * area), std::sqrt(a2 * area) / delta};
}

EnergyReport energy(const GaugePair& pair, const Solution& solution) {
  return energy(pair, solution.background->config().total_multiplicity());
}

EnergyReport energy(const GaugePair& pair, int total_multiplicity) {
  EnergyReport rep;
  const double delta = pair.geometry.delta;
  rep.density = ScalarField(pair.geometry);
  double total = 0.0;
  for (std::size_t k = 0; k < pair.higgs.size(); ++k) {
    if (!pair.valid[k]) continue;
    const double m2 = std::norm(pair.higgs[k]);
    const double e = pair.f12[k] * pair.f12[k] + std::norm(pair.d1[k]) + std::norm(pair.d2[k]) +
                     0.25 * (m2 - 1.0) * (m2 - 1.0);
    rep.density[k] = e / (delta * delta);
    total += e;
  }
  rep.total = total * pair.geometry.cell_area();
  rep.target = 2.0 * std::numbers::pi * total_multiplicity;
  return rep;
}

double flux_number(const GaugePair& pair) {
  double s = 0.0;
  for (std::size_t k = 0; k < pair.higgs.size(); ++k)
    if (pair.valid[k]) s += pair.f12[k];
  return s * pair.geometry.cell_area() / (2.0 * std::numbers::pi);
}

int winding_number(const Solution& solution, int i, int j, int radius, VortexSign sign) {
  const Reconstructor rec(solution);
  std::vector<VortexTerm> terms;
  rec.centre_terms(i, j, terms);
  std::vector<std::pair<int, int>> loop;
  for (int a = -radius; a < radius; ++a) loop.emplace_back(a, -radius);
  for (int b = -radius; b < radius; ++b) loop.emplace_back(radius, b);
  for (int a = radius; a > -radius; --a) loop.emplace_back(a, radius);
  for (int b = radius; b > -radius; --b) loop.emplace_back(-radius, b);
  double total = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const auto [a0, b0] = loop[k];
    const auto [a1, b1] = loop[(k + 1) % loop.size()];
    total += std::arg(rec.higgs(i, j, a1, b1, terms) / rec.higgs(i, j, a0, b0, terms));
  }
  const int w = static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
  return sign == VortexSign::Upper ? w : -w;
}

DecayAudit field_decay_audit(const GaugePair& pair, const Solution& solution, double r_min, double r_max,
                             double boundary_margin, double min_gap) {
  const GridGeometry& g = pair.geometry;
  const AnsatzBackground& bg = *solution.background;
  DecayAudit audit;
  audit.fit_r_min = r_min;
  audit.fit_r_max = r_max;
  std::vector<double> rs, ys;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!pair.valid[k]) continue;
      const Vec2 x = g.point(i, j);
      double r = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < bg.config().vortices.size(); ++v)
        r = std::min(r, bg.offset(static_cast<int>(v), x).norm());
      const double gap = 1.0 - std::norm(pair.higgs[k]);
      if (r >= r_min && r <= r_max && gap > 0.0) {
        rs.push_back(r);
        ys.push_back(std::log(gap));
      }
      double wall = std::numeric_limits<double>::infinity();
      if (g.boundary == Boundary::Dirichlet)
        wall = std::min({x.x(), g.extent_x() - x.x(), x.y(), g.extent_y() - x.y()});
      if (r >= 1.0 && wall >= boundary_margin && gap > min_gap) {
        const double dphi = std::sqrt(std::norm(pair.d1[k]) + std::norm(pair.d2[k]));
        audit.max_ratio = std::max(audit.max_ratio, dphi / gap);
      }
    }
  const LinearFit fit = fit_line(rs, ys);
  audit.fitted_rate = fit.slope;
  audit.fit_r_squared = fit.r_squared;
  return audit;
}

}  // namespace vortexglue
