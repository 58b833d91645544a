#include "vortexglue/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "vortexglue/errors.hpp"
#include "vortexglue/parallel.hpp"
#include "vortexglue/sampled_partition.hpp"

namespace vortexglue {
namespace {

// Radius beyond which |U| < cutoff, from the K0 tail.
double profile_cutoff_radius(const RadialProfile& prof, double cutoff) {
  double r = 1.0;
  while (r < 1e4 && std::abs(eval_profile(prof, r).U) >= cutoff) r += 0.5;
  return r;
}

struct ImageRange {
  int nx = 0;
  int ny = 0;
};

ImageRange image_range(const VortexConfiguration& c, double radius_hat) {
  if (c.domain.boundary != Boundary::Periodic) return {};
  const double lx = c.domain.lx / c.delta, ly = c.domain.ly / c.delta;
  return {static_cast<int>(std::ceil(radius_hat / lx)) + 1, static_cast<int>(std::ceil(radius_hat / ly)) + 1};
}

}  // namespace

SuperpositionError superposition_error(const Solution& sol, double image_cutoff) {
  const AnsatzBackground& bg = *sol.background;
  const VortexConfiguration& c = bg.config();
  const GridGeometry& g = sol.geometry();
  const double lx = c.domain.lx / c.delta, ly = c.domain.ly / c.delta;
  const int V = static_cast<int>(c.vortices.size());
  std::vector<double> reach(V);
  std::vector<ImageRange> ranges(V);
  for (int v = 0; v < V; ++v) {
    reach[v] = profile_cutoff_radius(bg.profile(c.vortices[v].multiplicity), image_cutoff);
    ranges[v] = image_range(c, reach[v]);
  }

  SuperpositionError out;
  out.omega = ScalarField(g);
  parallel_for(static_cast<std::size_t>(g.ny), [&](std::size_t jrow) {
    const int j = static_cast<int>(jrow);
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 x = g.point(i, j);
      // omega = z - sum_v [(1 - phi_v) U_v(nearest) + sum_{other images} U_v].
      double correction = 0.0;
      for (int v = 0; v < V; ++v) {
        const RadialProfile& prof = bg.profile(c.vortices[v].multiplicity);
        const Vec2 d = bg.offset(v, x);
        const PatchCutoff& cut = bg.cutoff(v);
        double phi = 0.0;
        {
          int a = i - cut.box.i0, b = j - cut.box.j0;
          if (g.boundary == Boundary::Periodic) {
            a = ((a % g.nx) + g.nx) % g.nx;
            b = ((b % g.ny) + g.ny) % g.ny;
          }
          if (a >= 0 && b >= 0 && a < cut.box.ni && b < cut.box.nj) phi = cut.value[cut.box.local(a, b)];
        }
        for (int sa = -ranges[v].nx; sa <= ranges[v].nx; ++sa)
          for (int sb = -ranges[v].ny; sb <= ranges[v].ny; ++sb) {
            const Vec2 e = d + Vec2(sa * lx, sb * ly);
            const double r = e.norm();
            const bool nearest = sa == 0 && sb == 0;
            if (r > reach[v]) continue;
            if (nearest) {
              if (phi < 1.0) correction += (1.0 - phi) * eval_profile(prof, r).U;
            } else {
              correction += eval_profile(prof, r).U;
            }
          }
      }
      out.omega(i, j) = sol.z(i, j) - correction;
    }
  });
  out.sup = sup_norm(out.omega);
  return out;
}

double superposition_cutoff_bound(const Solution& sol) {
  const AnsatzBackground& bg = *sol.background;
  const VortexConfiguration& c = bg.config();
  const double lx = c.domain.lx / c.delta, ly = c.domain.ly / c.delta;
  double bound = 0.0;
  for (std::size_t v = 0; v < c.vortices.size(); ++v) {
    const RadialProfile& prof = bg.profile(c.vortices[v].multiplicity);
    bound += std::abs(eval_profile(prof, bg.partition().core_radius(static_cast<int>(v)) / c.delta).U);
    if (c.domain.boundary != Boundary::Periodic) continue;
    // Every non-nearest image sits at least |s|/2 away from the evaluation point.
    const double reach = 2.0 * profile_cutoff_radius(prof, 1e-16);
    const ImageRange range = image_range(c, reach);
    for (int sa = -range.nx; sa <= range.nx; ++sa)
      for (int sb = -range.ny; sb <= range.ny; ++sb) {
        if (sa == 0 && sb == 0) continue;
        const double r = 0.5 * std::hypot(sa * lx, sb * ly);
        if (r <= 0.5 * reach) bound += std::abs(eval_profile(prof, r).U);
      }
  }
  return bound;
}

AsymptoticsAudit asymptotics_audit(const Solution& sol) {
  const AnsatzBackground& bg = *sol.background;
  const VortexConfiguration& c = bg.config();
  const GridGeometry& g = sol.geometry();
  AsymptoticsAudit audit;
  audit.excluded_radius = std::max(c.min_separation() / 4.0, 4.0 * c.delta);
  const double excluded_hat = audit.excluded_radius / c.delta;
  const ScalarField u = sol.u();
  audit.max_u = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double value = u(i, j);
      if (!std::isfinite(value)) continue;
      audit.max_u = std::max(audit.max_u, value);
      bool inside_K = true;
      for (std::size_t v = 0; v < c.vortices.size() && inside_K; ++v)
        if (bg.offset(static_cast<int>(v), g.point(i, j)).norm() < excluded_hat) inside_K = false;
      if (inside_K) audit.sup_on_K = std::max(audit.sup_on_K, -std::expm1(value));
    }
  return audit;
}

TestFunction vortex_bump(const Domain& domain, const Vec2& p, double inner, double outer) {
  return [=](const Vec2& x) {
    const double r = domain.distance(p, x);
    if (r >= outer) return 0.0;
    double cut = 1.0;
    if (r > inner) {
      const double s = (outer - r) / (outer - inner);
      cut = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    }
    return (1.0 - 0.25 * r * r) * cut;
  };
}

TestFunction plain_bump(const Domain& domain, const Vec2& c, double radius) {
  return [=](const Vec2& x) {
    const double r = domain.distance(c, x);
    if (r >= radius) return 0.0;
    const double q = 1.0 - (r * r) / (radius * radius);
    return q * q * q * q;
  };
}

TestFunction constant_function(double value) {
  return [value](const Vec2&) { return value; };
}

double distributional_error(const Solution& sol, const TestFunction& psi) {
  const AnsatzBackground& bg = *sol.background;
  const GridGeometry& g = sol.geometry();
  const double delta = sol.delta();
  const ScalarField& logp = bg.log_part();
  const ScalarField& smooth = bg.smooth_part();
  std::vector<double> rows(static_cast<std::size_t>(g.ny), 0.0);
  parallel_for(rows.size(), [&](std::size_t jr) {
    const int j = static_cast<int>(jr);
    double acc = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double w = psi(g.point(i, j) * delta);
      if (w == 0.0) continue;
      const double u = logp[k] + smooth[k] + sol.z[k];
      const double one_minus = std::isfinite(u) ? -std::expm1(u) : 1.0;
      acc += one_minus * w;
    }
    rows[jr] = acc;
  });
  double integral = 0.0;
  for (double r : rows) integral += r;
  integral *= g.cell_area();
  double point_mass = 0.0;
  for (const auto& v : bg.config().vortices) point_mass += 4.0 * std::numbers::pi * v.multiplicity * psi(v.position);
  return std::abs(integral - point_mass);
}

double periodicity_check(const Solution& cell, const Solution& supercell) {
  const GridGeometry& gc = cell.geometry();
  const GridGeometry& gs = supercell.geometry();
  if (gc.boundary != Boundary::Periodic || gs.boundary != Boundary::Periodic)
    throw ConfigError("periodicity check needs periodic solutions");
  if (std::abs(gc.h - gs.h) > 1e-12 * gc.h || gs.nx % gc.nx != 0 || gs.ny % gc.ny != 0)
    throw ConfigError("periodicity check: supercell grid is not a tiling of the cell grid");
  const ScalarField uc = cell.u();
  const ScalarField us = supercell.u();
  auto diff = [](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(a - b);
  };
  double worst = 0.0;
  for (int j = 0; j < gs.ny; ++j)
    for (int i = 0; i < gs.nx; ++i) {
      const double v = us(i, j);
      worst = std::max(worst, diff(v, uc(i % gc.nx, j % gc.ny)));
      worst = std::max(worst, diff(v, us.at(i + gc.nx, j)));
      worst = std::max(worst, diff(v, us.at(i, j + gc.ny)));
    }
  return worst;
}

TestFunction default_test_function(const VortexConfiguration& config, int vortex) {
  const double d = config.min_separation();
  const double reach = std::isfinite(d) ? d : 2.0 * config.domain.distance_to_boundary(config.vortices[vortex].position);
  return vortex_bump(config.domain, config.vortices[vortex].position, 0.35 * reach, 0.6 * reach);
}

double flux_error(const Solution& sol) {
  const double target = 4.0 * std::numbers::pi * sol.background->config().total_multiplicity();
  return distributional_error(sol, constant_function(1.0)) / target;
}

SweepRecord sweep_record(const Solution& sol, const TestFunction& psi, bool measure_plain) {
  SweepRecord r;
  r.delta = sol.delta();
  r.z_sup = sol.report.z_sup;
  r.residual_at_zero = sol.report.residual_at_zero;
  r.omega_sup = superposition_error(sol).sup;
  r.cutoff_bound = superposition_cutoff_bound(sol);
  r.distributional = distributional_error(sol, psi);
  r.contraction = sol.report.contraction;
  r.iterations = sol.report.iterations;
  r.krylov_preconditioned = sol.report.krylov_iterations.empty() ? 0 : sol.report.krylov_iterations.front();
  if (measure_plain) {
    const AnsatzBackground& bg = *sol.background;
    const LinearSolveResult plain =
        solve_linear(bg.weight(), nullptr, bg.residual_at_zero(), 1e-9, 200000);
    r.krylov_plain = plain.iterations;
  }
  r.flux_error = flux_error(sol);
  return r;
}

std::vector<SweepRecord> run_sweep(const VortexConfiguration& base, const SweepSettings& settings,
                                   const ProfileSet& profiles) {
  const TestFunction psi = settings.test_function ? settings.test_function : default_test_function(base, 0);
  std::vector<SweepRecord> records(settings.deltas.size());
  parallel_for(settings.deltas.size(), [&](std::size_t k) {
    VortexConfiguration c = base;
    c.delta = settings.deltas[k];
    const Solution sol = solve(c, settings.solver, profiles);
    records[k] = sweep_record(sol, psi, settings.measure_plain);
  });
  return records;
}

ScalarField random_smooth_field(const GridGeometry& g, std::mt19937_64& rng, int modes) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  ScalarField f(g);
  const bool torus = g.boundary == Boundary::Periodic;
  const double kx = (torus ? 2.0 : 1.0) * std::numbers::pi / g.extent_x();
  const double ky = (torus ? 2.0 : 1.0) * std::numbers::pi / g.extent_y();
  std::vector<double> cx(g.nx), sx(g.nx), cy(g.ny), sy(g.ny);
  for (int a = torus ? 0 : 1; a <= modes; ++a) {
    for (int i = 0; i < g.nx; ++i) {
      cx[i] = std::cos(a * kx * g.x(i));
      sx[i] = std::sin(a * kx * g.x(i));
    }
    for (int b = torus ? -modes : 1; b <= modes; ++b) {
      const double c = normal(rng) / (1.0 + a * a + b * b);
      const double p = phase(rng);
      for (int j = 0; j < g.ny; ++j) {
        cy[j] = std::cos(b * ky * g.y(j) + p);
        sy[j] = std::sin(b * ky * g.y(j) + p);
      }
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f(i, j) += torus ? c * (cx[i] * cy[j] - sx[i] * sy[j]) : c * sx[i] * std::sin(b * ky * g.y(j));
    }
  }
  return f;
}

OperatorAudit inverse_defect_audit(const AnsatzBackground& bg, const ApproximateInverse& inverse, int samples,
                                   std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  OperatorAudit audit;
  for (int s = 0; s < samples; ++s) {
    const ScalarField v = random_smooth_field(bg.geometry(), rng, modes);
    ScalarField defect = inverse.apply(apply_L(bg, v));
    defect -= v;
    const double ratio = norm_X(defect, bg.sampled()) / norm_X(v, bg.sampled());
    audit.max_ratio = std::max(audit.max_ratio, ratio);
    audit.mean_ratio += ratio / samples;
  }
  audit.samples = samples;
  return audit;
}

OperatorAudit embedding_audit(const SampledPartition& partition, int samples, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  OperatorAudit audit;
  for (int s = 0; s < samples; ++s) {
    const ScalarField v = random_smooth_field(partition.geometry(), rng, modes);
    const double ratio = sup_norm(v) / norm_X(v, partition);
    audit.max_ratio = std::max(audit.max_ratio, ratio);
    audit.mean_ratio += ratio / samples;
  }
  audit.samples = samples;
  return audit;
}

SweepFits fit_sweep(const std::vector<SweepRecord>& records) {
  std::vector<double> d, z, f, w, e;
  for (const auto& r : records) {
    d.push_back(r.delta);
    z.push_back(r.z_sup);
    f.push_back(r.residual_at_zero);
    w.push_back(r.omega_sup);
    e.push_back(r.distributional);
  }
  SweepFits fits;
  fits.z_law = fit_exponential_law(d, z);
  fits.residual_law = fit_exponential_law(d, f);
  fits.omega_law = fit_exponential_law(d, w);
  fits.distributional = fit_power_law(d, e);
  return fits;
}

std::string fit_json(const LinearFit& fit) {
  nlohmann::ordered_json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  j["samples"] = fit.samples;
  return j.dump();
}

void write_sweep(const std::vector<SweepRecord>& records, const SweepFits& fits,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::FILE* f = std::fopen((dir / "sweep.csv").c_str(), "w");
    if (!f) throw IoError("cannot write " + (dir / "sweep.csv").string());
    std::fprintf(f,
                 "delta,z_sup,residual_at_zero,omega_sup,cutoff_bound,distributional,contraction,iterations,"
                 "krylov_preconditioned,krylov_plain,flux_error\n");
    for (const auto& r : records)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%.17g\n", r.delta, r.z_sup,
                   r.residual_at_zero, r.omega_sup, r.cutoff_bound, r.distributional, r.contraction, r.iterations,
                   r.krylov_preconditioned, r.krylov_plain, r.flux_error);
    if (std::fclose(f) != 0) throw IoError("cannot write sweep.csv");
  }
  nlohmann::ordered_json j;
  auto put = [&](const char* name, const LinearFit& fit, const char* x, const char* law) {
    j[name] = nlohmann::ordered_json::parse(fit_json(fit));
    j[name]["x"] = x;
    j[name]["law"] = law;
  };
  put("z_sup", fits.z_law, "1/delta", "exponential");
  put("residual_at_zero", fits.residual_law, "1/delta", "exponential");
  put("omega_sup", fits.omega_law, "1/delta", "exponential");
  put("distributional", fits.distributional, "ln delta", "power");
  std::ofstream out(dir / "fits.json");
  if (!out) throw IoError("cannot write fits.json");
  out << j.dump(2) << '\n';

  auto dat = [&](const char* file, auto value, bool power) {
    std::FILE* f = std::fopen((dir / file).c_str(), "w");
    if (!f) throw IoError(std::string("cannot write ") + file);
    std::fprintf(f, "# %s ln(value)\n", power ? "ln(delta)" : "1/delta");
    for (const auto& r : records) {
      const double y = value(r);
      if (y > 0.0) std::fprintf(f, "%.17g %.17g\n", power ? std::log(r.delta) : 1.0 / r.delta, std::log(y));
    }
    std::fclose(f);
  };
  dat("z_law.dat", [](const SweepRecord& r) { return r.z_sup; }, false);
  dat("residual_law.dat", [](const SweepRecord& r) { return r.residual_at_zero; }, false);
  dat("omega_law.dat", [](const SweepRecord& r) { return r.omega_sup; }, false);
  dat("distributional_law.dat", [](const SweepRecord& r) { return r.distributional; }, true);
}

}  // namespace vortexglue
