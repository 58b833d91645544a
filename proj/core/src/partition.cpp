#include "vortexglue/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "vortexglue/errors.hpp"

namespace vortexglue {
namespace {

constexpr double kPlateau = 0.25;  // bump == 1 for |t| <= 1/4
constexpr double kReach = 0.75;    // bump == 0 for |t| >= 3/4

int wrap(int n, int m) { return ((n % m) + m) % m; }

// Picks the cell count along one side; r0 is shrunk until it divides the side.
int cells_along(double side, double r0_target) {
  return std::max(1, static_cast<int>(std::ceil(side / r0_target - 1e-9)));
}

// Smallest count >= m1 whose spacing also tiles the other side, or -1.
int commensurate_count(double lx, double ly, int m1) {
  for (int m = m1; m < m1 + 100000; ++m) {
    const double r = lx / m;
    const double q = ly / r;
    if (std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q)) return m;
  }
  return -1;
}

Jet cell_jet(double tx, double ty, double r0, int order) {
  const BumpJet bx = lattice_bump(tx);
  const BumpJet by = lattice_bump(ty);
  Jet j;
  j.value = bx.value * by.value;
  if (order >= 1) j.gradient = Vec2(bx.d1 * by.value, bx.value * by.d1) / r0;
  if (order >= 2) {
    j.hessian(0, 0) = bx.d2 * by.value;
    j.hessian(1, 1) = bx.value * by.d2;
    j.hessian(0, 1) = j.hessian(1, 0) = bx.d1 * by.d1;
    j.hessian /= r0 * r0;
  }
  return j;
}

void accumulate(Jet& into, const Jet& add) {
  into.value += add.value;
  into.gradient += add.gradient;
  into.hessian += add.hessian;
}

}  // namespace

BumpJet lattice_bump(double t) {
  const double a = std::abs(t);
  if (a <= kPlateau) return {1.0, 0.0, 0.0};
  if (a >= kReach) return {0.0, 0.0, 0.0};
  const double s = (kReach - a) / (kReach - kPlateau);
  const double ds = -(t > 0 ? 1.0 : -1.0) / (kReach - kPlateau);
  const double q = s * (1.0 - s);
  const double value = s * s * s * s * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s);
  const double d1 = 140.0 * q * q * q;
  const double d2 = 420.0 * q * q * (1.0 - 2.0 * s);
  return {value, d1 * ds, d2 * ds * ds};
}

Vec2 PartitionOfUnity::cell_center(CellIndex c) const { return Vec2(c.i * r0_, c.j * r0_); }

PartitionOfUnity PartitionOfUnity::build(const VortexConfiguration& config) {
  config.validate();
  PartitionOfUnity p;
  p.config_ = config;
  const Domain& dom = config.domain;
  const double d = config.min_separation();
  const bool automatic = !config.r0.has_value();
  double clearance = std::numeric_limits<double>::infinity();
  if (dom.boundary == Boundary::Dirichlet)
    for (const auto& v : config.vortices) clearance = std::min(clearance, dom.distance_to_boundary(v.position));
  double target = automatic ? std::min({d / 4.0, clearance / 4.0, 0.5}) : *config.r0;

  for (int attempt = 0; attempt < 40; ++attempt) {
    int m1 = cells_along(dom.lx, target);
    if (automatic) {
      m1 = commensurate_count(dom.lx, dom.ly, m1);
      if (m1 < 0) throw ConfigError("partition: domain sides are not commensurate with any lattice spacing");
    } else {
      const double q1 = dom.lx / target, q2 = dom.ly / target;
      if (std::abs(q1 - std::round(q1)) > 1e-9 * q1 || std::abs(q2 - std::round(q2)) > 1e-9 * q2)
        throw ConfigError("partition: r0 must divide both domain sides");
    }
    p.r0_ = dom.lx / m1;
    const int m2 = static_cast<int>(std::llround(dom.ly / p.r0_));
    if (dom.boundary == Boundary::Periodic) {
      p.cells_x_ = m1;
      p.cells_y_ = m2;
      if (m1 < 4 || m2 < 4) throw ConfigError("partition: a torus needs at least 4 lattice cells per side");
    } else {
      p.cells_x_ = m1 + 1;
      p.cells_y_ = m2 + 1;
    }

    // Separation and boundary clearance relative to this r0.
    const auto& vs = config.vortices;
    for (std::size_t a = 0; a < vs.size(); ++a) {
      for (std::size_t b = a + 1; b < vs.size(); ++b) {
        const double dist = dom.distance(vs[a].position, vs[b].position);
        if (dist < 4.0 * p.r0_ * (1.0 - 1e-12)) {
          std::ostringstream msg;
          msg << "partition: vortices " << a << " and " << b << " are " << dist
              << " apart, closer than 4*r0 = " << 4.0 * p.r0_;
          throw ConfigError(msg.str());
        }
      }
      if (dom.boundary == Boundary::Dirichlet &&
          dom.distance_to_boundary(vs[a].position) < 4.0 * p.r0_ * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "partition: vortex " << a << " is closer than 4*r0 = " << 4.0 * p.r0_ << " to the boundary";
        throw ConfigError(msg.str());
      }
    }
    if (p.build_cells()) return p;
    if (!automatic) throw ConfigError("partition: vortex patches overlap for the requested r0");
    target = 0.9 * p.r0_;
  }
  throw ConfigError("partition: could not separate vortex patches");
}

bool PartitionOfUnity::build_cells() {
  const int V = static_cast<int>(config_.vortices.size());
  const bool periodic = config_.domain.boundary == Boundary::Periodic;
  owner_.assign(static_cast<std::size_t>(cells_x_) * cells_y_, -1);
  vortex_cells_.assign(V, {});
  leftover_cells_.clear();
  core_radius_.assign(V, 0.0);

  auto square_distance = [&](const Vec2& p, const Vec2& c) {
    // Euclidean distance from p to the open square of half side kReach*r0 about c.
    const double half = kReach * r0_;
    const double dx = std::max(0.0, std::abs(p.x() - c.x()) - half);
    const double dy = std::max(0.0, std::abs(p.y() - c.y()) - half);
    return std::hypot(dx, dy);
  };
  auto slot = [&](int i, int j) -> int& {
    if (periodic) return owner_[static_cast<std::size_t>(wrap(j, cells_y_)) * cells_x_ + wrap(i, cells_x_)];
    return owner_[static_cast<std::size_t>(j) * cells_x_ + i];
  };
  auto in_lattice = [&](int i, int j) {
    return periodic || (i >= 0 && i < cells_x_ && j >= 0 && j < cells_y_);
  };

  for (int v = 0; v < V; ++v) {
    const Vec2 p = config_.vortices[v].position;
    const int ci = static_cast<int>(std::floor(p.x() / r0_));
    const int cj = static_cast<int>(std::floor(p.y() / r0_));
    for (int j = cj - 2; j <= cj + 3; ++j) {
      for (int i = ci - 2; i <= ci + 3; ++i) {
        if (!in_lattice(i, j)) continue;
        if (square_distance(p, Vec2(i * r0_, j * r0_)) < kPlateau * r0_) {
          int& o = slot(i, j);
          if (o >= 0) return false;
          o = v;
          vortex_cells_[v].push_back({i, j});
        }
      }
    }
  }
  // Patches must not touch: cells of different vortices may not share support.
  for (int a = 0; a < V; ++a)
    for (int b = a + 1; b < V; ++b)
      for (const auto& ca : vortex_cells_[a])
        for (const auto& cb : vortex_cells_[b]) {
          int di = ca.i - cb.i, dj = ca.j - cb.j;
          if (periodic) {
            di -= cells_x_ * static_cast<int>(std::lround(static_cast<double>(di) / cells_x_));
            dj -= cells_y_ * static_cast<int>(std::lround(static_cast<double>(dj) / cells_y_));
          }
          if (std::abs(di) <= 1 && std::abs(dj) <= 1) return false;
        }

  for (int j = 0; j < cells_y_; ++j)
    for (int i = 0; i < cells_x_; ++i)
      if (owner_[static_cast<std::size_t>(j) * cells_x_ + i] < 0) {
        owner_[static_cast<std::size_t>(j) * cells_x_ + i] = V + static_cast<int>(leftover_cells_.size());
        leftover_cells_.push_back({i, j});
      }

  for (int v = 0; v < V; ++v) {
    const Vec2 p = config_.vortices[v].position;
    const int ci = static_cast<int>(std::floor(p.x() / r0_));
    const int cj = static_cast<int>(std::floor(p.y() / r0_));
    double rho = std::numeric_limits<double>::infinity();
    for (int j = cj - 4; j <= cj + 5; ++j)
      for (int i = ci - 4; i <= ci + 5; ++i) {
        if (!in_lattice(i, j)) continue;
        if (slot(i, j) == v) continue;
        rho = std::min(rho, square_distance(p, Vec2(i * r0_, j * r0_)));
      }
    core_radius_[v] = rho;
  }

  // Each axis sees at most two bumps at once (support width 1.5 r0 < 2 r0).
  max_active_ = 4;
  return true;
}

int PartitionOfUnity::active_cells(const Vec2& x, int order, std::array<CellJet, 16>& out) const {
  const bool periodic = config_.domain.boundary == Boundary::Periodic;
  const double lx = config_.domain.lx, ly = config_.domain.ly;
  int count = 0;
  const double tx = x.x() / r0_, ty = x.y() / r0_;
  const int i_lo = static_cast<int>(std::floor(tx - kReach)) + 1;
  const int i_hi = static_cast<int>(std::floor(tx + kReach));
  const int j_lo = static_cast<int>(std::floor(ty - kReach)) + 1;
  const int j_hi = static_cast<int>(std::floor(ty + kReach));
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      int ii = i, jj = j;
      double dx = x.x() - i * r0_, dy = x.y() - j * r0_;
      if (periodic) {
        ii = wrap(i, cells_x_);
        jj = wrap(j, cells_y_);
        dx -= lx * std::round(dx / lx);
        dy -= ly * std::round(dy / ly);
      } else if (i < 0 || i >= cells_x_ || j < 0 || j >= cells_y_) {
        continue;
      }
      Jet jet = cell_jet(dx / r0_, dy / r0_, r0_, order);
      if (jet.value == 0.0 && order == 0) continue;
      out[count++] = {cell_owner(ii, jj), jet};
    }
  }
  return count;
}

Jet PartitionOfUnity::eval_physical(const Vec2& x, PartitionKind kind, int index, int order) const {
  std::array<CellJet, 16> cells;
  const int count = active_cells(x, order, cells);
  const int V = vortex_count();
  const bool vortex_kind = kind == PartitionKind::Phi || kind == PartitionKind::G;
  const int target = vortex_kind ? index : V + index;

  Jet f;
  for (int c = 0; c < count; ++c)
    if (cells[c].owner == target) accumulate(f, cells[c].jet);
  if (kind == PartitionKind::Phi || kind == PartitionKind::Psi) return f;
  if (f.value == 0.0) return Jet{};

  // Group cells by owner and form S = sum_o f_o^2.
  std::array<int, 16> owners{};
  std::array<Jet, 16> sums;
  int n_owners = 0;
  for (int c = 0; c < count; ++c) {
    int slot = 0;
    while (slot < n_owners && owners[slot] != cells[c].owner) ++slot;
    if (slot == n_owners) {
      owners[n_owners] = cells[c].owner;
      sums[n_owners] = Jet{};
      ++n_owners;
    }
    accumulate(sums[slot], cells[c].jet);
  }
  double S = 0.0;
  Vec2 dS = Vec2::Zero();
  Eigen::Matrix2d d2S = Eigen::Matrix2d::Zero();
  for (int o = 0; o < n_owners; ++o) {
    const Jet& fo = sums[o];
    S += fo.value * fo.value;
    if (order >= 1) dS += 2.0 * fo.value * fo.gradient;
    if (order >= 2) d2S += 2.0 * (fo.gradient * fo.gradient.transpose() + fo.value * fo.hessian);
  }
  const double q = 1.0 / std::sqrt(S);
  Jet g;
  g.value = f.value * q;
  if (order >= 1) {
    const Vec2 dq = -0.5 * q * q * q * dS;
    g.gradient = q * f.gradient + f.value * dq;
    if (order >= 2) {
      const Eigen::Matrix2d d2q = -0.5 * q * q * q * d2S + 0.75 * q * q * q * q * q * dS * dS.transpose();
      g.hessian = q * f.hessian + f.gradient * dq.transpose() + dq * f.gradient.transpose() + f.value * d2q;
    }
  }
  return g;
}

Jet PartitionOfUnity::eval(const Vec2& x_hat, PartitionKind kind, int index, int order) const {
  const double delta = config_.delta;
  Jet j = eval_physical(x_hat * delta, kind, index, order);
  j.gradient *= delta;
  j.hessian *= delta * delta;
  return j;
}

ActiveSet PartitionOfUnity::active_indices_physical(const Vec2& x) const {
  std::array<CellJet, 16> cells;
  const int count = active_cells(x, 0, cells);
  const int V = vortex_count();
  ActiveSet set;
  for (int c = 0; c < count; ++c) {
    if (!(cells[c].jet.value > 0.0)) continue;
    const int o = cells[c].owner;
    auto& list = o < V ? set.vortices : set.cells;
    const int id = o < V ? o : o - V;
    if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
  }
  std::sort(set.vortices.begin(), set.vortices.end());
  std::sort(set.cells.begin(), set.cells.end());
  return set;
}

ActiveSet PartitionOfUnity::active_indices(const Vec2& x_hat) const {
  return active_indices_physical(x_hat * config_.delta);
}

std::array<double, 4> PartitionOfUnity::support_box(PartitionKind kind, int index) const {
  const double half = kReach * r0_;
  if (kind == PartitionKind::Psi || kind == PartitionKind::H) {
    const Vec2 c = cell_center(leftover_cells_[index]);
    return {c.x() - half, c.y() - half, c.x() + half, c.y() + half};
  }
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& cell : vortex_cells_[index]) {
    const Vec2 c = cell_center(cell);
    x0 = std::min(x0, c.x() - half);
    y0 = std::min(y0, c.y() - half);
    x1 = std::max(x1, c.x() + half);
    y1 = std::max(y1, c.y() + half);
  }
  return {x0, y0, x1, y1};
}

std::string PartitionOfUnity::summary_json() const {
  nlohmann::ordered_json j;
  j["r0"] = r0_;
  j["delta"] = config_.delta;
  j["cells"] = {cells_x_, cells_y_};
  j["max_active"] = max_active_;
  auto& patches = j["vortex_patches"] = nlohmann::ordered_json::array();
  for (int v = 0; v < vortex_count(); ++v) {
    nlohmann::ordered_json pj;
    pj["vortex"] = v;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : vortex_cells_[v]) cells.push_back({c.i, c.j});
    pj["cells"] = cells;
    const auto box = support_box(PartitionKind::Phi, v);
    pj["support_box"] = {box[0], box[1], box[2], box[3]};
    pj["core_radius"] = core_radius_[v];
    patches.push_back(pj);
  }
  auto left = nlohmann::ordered_json::array();
  for (const auto& c : leftover_cells_) left.push_back({c.i, c.j});
  j["leftover_cells"] = left;
  return j.dump(2);
}

}  // namespace vortexglue
