#include "vortexglue/radial_profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "vortexglue/errors.hpp"

namespace vortexglue {
namespace {

using std::numbers::pi;

struct ReferenceElement {
  int order = 0;
  std::vector<double> xi;      // ascending Chebyshev-Lobatto points on [-1, 1]
  std::vector<double> lambda;  // barycentric weights
  Eigen::MatrixXd D;           // differentiation on [-1, 1]
};

ReferenceElement make_reference(int p) {
  ReferenceElement ref;
  ref.order = p;
  ref.xi.resize(p + 1);
  ref.lambda.resize(p + 1);
  for (int k = 0; k <= p; ++k) {
    ref.xi[k] = -std::cos(pi * k / p);
    ref.lambda[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == p) ? 0.5 : 1.0);
  }
  ref.xi[0] = -1.0;
  ref.xi[p] = 1.0;
  if (p % 2 == 0) ref.xi[p / 2] = 0.0;
  ref.D = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int i = 0; i <= p; ++i) {
    double diag = 0.0;
    for (int j = 0; j <= p; ++j) {
      if (i == j) continue;
      const double v = (ref.lambda[j] / ref.lambda[i]) / (ref.xi[i] - ref.xi[j]);
      ref.D(i, j) = v;
      diag -= v;
    }
    ref.D(i, i) = diag;
  }
  return ref;
}

// Barycentric interpolation of nodal values f at reference coordinate s.
double interpolate(const ReferenceElement& ref, const double* f, double s) {
  double num = 0.0, den = 0.0;
  for (int k = 0; k <= ref.order; ++k) {
    const double d = s - ref.xi[k];
    if (d == 0.0) return f[k];
    const double c = ref.lambda[k] / d;
    num += c * f[k];
    den += c;
  }
  return num / den;
}

std::vector<double> make_breakpoints(double r_max, const RadialResolution& res) {
  std::vector<double> b{0.0};
  const double eps = 1e-12;
  while (b.back() < r_max - eps) {
    const double width = b.back() < res.inner_radius - eps ? res.inner_width : res.outer_width;
    double next = b.back() + width;
    if (b.back() < res.inner_radius - eps && next > res.inner_radius) next = res.inner_radius;
    // Avoid a sliver element at the end.
    if (next > r_max - 0.25 * width) next = r_max;
    b.push_back(next);
  }
  b.back() = r_max;
  return b;
}

struct Discretisation {
  ReferenceElement ref;
  std::vector<double> breakpoints;
  std::vector<double> nodes;
  std::vector<Eigen::MatrixXd> d1;  // per element, physical scaling
  std::vector<Eigen::MatrixXd> d2;
  int elements() const { return static_cast<int>(breakpoints.size()) - 1; }
  int unknowns() const { return elements() * ref.order + 1; }
};

Discretisation make_discretisation(double r_max, const RadialResolution& res) {
  Discretisation disc;
  disc.ref = make_reference(res.order);
  disc.breakpoints = make_breakpoints(r_max, res);
  const int p = res.order;
  disc.nodes.assign(disc.unknowns(), 0.0);
  for (int e = 0; e < disc.elements(); ++e) {
    const double a = disc.breakpoints[e], b = disc.breakpoints[e + 1];
    for (int k = 0; k <= p; ++k)
      disc.nodes[e * p + k] = 0.5 * (a + b) + 0.5 * (b - a) * disc.ref.xi[k];
    disc.nodes[e * p] = a;
    disc.nodes[e * p + p] = b;
    Eigen::MatrixXd d1 = disc.ref.D * (2.0 / (b - a));
    disc.d2.push_back(d1 * d1);
    disc.d1.push_back(std::move(d1));
  }
  return disc;
}

double log_weight(int N, double r) { return N == 0 ? 0.0 : 2.0 * N * std::log(r); }

struct NewtonSystem {
  Eigen::VectorXd residual;
  Eigen::SparseMatrix<double> jacobian;
};

// Collocation system for w'' + w'/r = r^{2N} e^w - 1 with w'(0) = 0, C^1
// matching at element interfaces and U'/U = -K1/K0 at r_max.
NewtonSystem assemble(const Discretisation& disc, int N, double r_max, const Eigen::VectorXd& w,
                      bool with_jacobian) {
  const int p = disc.ref.order;
  const int n = disc.unknowns();
  NewtonSystem sys;
  sys.residual = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  if (with_jacobian) trip.reserve(static_cast<std::size_t>(n) * (p + 1) * 2);

  auto row_derivative = [&](int row, int e, int local, double scale, int which) {
    const Eigen::MatrixXd& D = which == 1 ? disc.d1[e] : disc.d2[e];
    // Differentiating w - w(left edge) keeps rounding proportional to the
    // variation of w across the element rather than its magnitude.
    const double anchor = w[e * p];
    double acc = 0.0;
    for (int k = 0; k <= p; ++k) {
      acc += D(local, k) * (w[e * p + k] - anchor);
      if (with_jacobian) trip.emplace_back(row, e * p + k, scale * D(local, k));
    }
    return acc * scale;
  };

  sys.residual[0] = row_derivative(0, 0, 0, 1.0, 1);
  for (int e = 0; e < disc.elements(); ++e) {
    for (int i = 1; i < p; ++i) {
      const int row = e * p + i;
      const double r = disc.nodes[row];
      double value = row_derivative(row, e, i, 1.0, 2);
      value += row_derivative(row, e, i, 1.0 / r, 1);
      const double source = std::exp(log_weight(N, r) + w[row]);
      value += 1.0 - source;
      if (with_jacobian) trip.emplace_back(row, row, -source);
      sys.residual[row] = value;
    }
    if (e + 1 < disc.elements()) {
      const int row = (e + 1) * p;
      double value = row_derivative(row, e, p, 1.0, 1);
      value += row_derivative(row, e + 1, 0, -1.0, 1);
      sys.residual[row] = value;
    }
  }
  const int last = n - 1;
  const double kappa = -std::cyl_bessel_k(1.0, r_max) / std::cyl_bessel_k(0.0, r_max);
  double value = row_derivative(last, disc.elements() - 1, p, 1.0, 1);
  value += 2.0 * N / r_max - kappa * (log_weight(N, r_max) + w[last]);
  if (with_jacobian) trip.emplace_back(last, last, -kappa);
  sys.residual[last] = value;

  if (with_jacobian) {
    sys.jacobian.resize(n, n);
    sys.jacobian.setFromTriplets(trip.begin(), trip.end());
  }
  return sys;
}

struct NewtonOutcome {
  Eigen::VectorXd w;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

NewtonOutcome newton(const Discretisation& disc, int N, double r_max) {
  const int n = disc.unknowns();
  NewtonOutcome out;
  out.w.resize(n);
  const double mu = 4.0 * N + 1.0;
  for (int k = 0; k < n; ++k) out.w[k] = -N * std::log(disc.nodes[k] * disc.nodes[k] + mu);

  NewtonSystem sys = assemble(disc, N, r_max, out.w, true);
  double res = sys.residual.lpNorm<Eigen::Infinity>();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 1; it <= 100; ++it) {
    if (res < 1e-13) {
      out.converged = true;
      break;
    }
    lu.compute(sys.jacobian);
    if (lu.info() != Eigen::Success) break;
    const Eigen::VectorXd step = lu.solve(-sys.residual);
    double lambda = 1.0;
    Eigen::VectorXd trial;
    double trial_res = 0.0;
    for (;;) {
      trial = out.w + lambda * step;
      trial_res = assemble(disc, N, r_max, trial, false).residual.lpNorm<Eigen::Infinity>();
      if (std::isfinite(trial_res) && trial_res <= (1.0 - 1e-4 * lambda) * res) break;
      lambda *= 0.5;
      if (lambda < 1e-6) break;
    }
    out.iterations = it;
    const double step_norm = lambda * step.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(trial_res) || trial_res > res) {
      // Roundoff floor reached: no further decrease is possible.
      out.converged = res < 1e-9;
      break;
    }
    out.w = trial;
    sys = assemble(disc, N, r_max, out.w, true);
    res = sys.residual.lpNorm<Eigen::Infinity>();
    if (step_norm < 1e-14 * (1.0 + out.w.lpNorm<Eigen::Infinity>())) {
      out.converged = res < 1e-9;
      break;
    }
  }
  if (res < 1e-13) out.converged = true;
  out.residual = res;
  return out;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m - 1);
  for (int k = 1; k < m; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  std::vector<double> x(m), wts(m);
  for (int k = 0; k < m; ++k) {
    x[k] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    wts[k] = 2.0 * v * v;
  }
  return {x, wts};
}

// Element lookup shared by evaluation routines.
int element_of(const RadialProfile& prof, double r) {
  const auto it = std::upper_bound(prof.breakpoints.begin(), prof.breakpoints.end(), r);
  int e = static_cast<int>(it - prof.breakpoints.begin()) - 1;
  return std::clamp(e, 0, static_cast<int>(prof.breakpoints.size()) - 2);
}

const ReferenceElement& cached_reference(int order) {
  thread_local std::deque<ReferenceElement> cache;
  for (const auto& ref : cache)
    if (ref.order == order) return ref;
  cache.push_back(make_reference(order));
  return cache.back();
}

// ODE residual of the interpolant at points strictly between collocation nodes.
double off_node_residual(const Discretisation& disc, int N, const Eigen::VectorXd& w) {
  const int p = disc.ref.order;
  double worst = 0.0;
  std::vector<double> f(p + 1), f1(p + 1), f2(p + 1);
  for (int e = 0; e < disc.elements(); ++e) {
    const double a = disc.breakpoints[e], b = disc.breakpoints[e + 1];
    for (int k = 0; k <= p; ++k) f[k] = w[e * p + k];
    Eigen::VectorXd fv(p + 1);
    for (int k = 0; k <= p; ++k) fv[k] = f[k] - f[0];
    Eigen::VectorXd g1 = disc.d1[e] * fv;
    Eigen::VectorXd g2 = disc.d2[e] * fv;
    for (int k = 0; k < p; ++k) {
      const double s = 0.5 * (disc.ref.xi[k] + disc.ref.xi[k + 1]);
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * s;
      const double wv = interpolate(disc.ref, f.data(), s);
      const double w1 = interpolate(disc.ref, g1.data(), s);
      const double w2 = interpolate(disc.ref, g2.data(), s);
      const double res = w2 + w1 / r - std::exp(log_weight(N, r) + wv) + 1.0;
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

void fill_decay_constants(RadialProfile& prof) {
  const int N = prof.multiplicity;
  if (N == 0) {
    prof.decay_alpha = 1.0;
    prof.decay_C = 0.0;
    return;
  }
  const double R = prof.r_max;
  std::vector<double> xs, ys;
  for (int k = 0; k <= 60; ++k) {
    const double r = R / 3.0 + (R / 3.0) * k / 60.0;
    const double U = eval_profile(prof, r).U;
    if (U >= 0.0) continue;
    xs.push_back(r);
    ys.push_back(std::log(-U * std::sqrt(r)));
  }
  double alpha = 1.0;
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    alpha = std::min(1.0, -sxy / sxx);
  }
  prof.decay_alpha = alpha;
  double C = 0.0;
  const int samples = 4000;
  for (int k = 0; k <= samples; ++k) {
    const double r = 1.0 + (2.0 * R - 1.0) * k / samples;
    const ProfileSample s = eval_profile(prof, r);
    C = std::max(C, (std::abs(s.one_minus_exp_U) + std::abs(s.U_prime) + std::abs(s.U)) *
                        std::exp(alpha * r));
  }
  prof.decay_C = C * (1.0 + 1e-6);
}

}  // namespace

RadialResolution RadialResolution::refined() const {
  RadialResolution r = *this;
  r.inner_width *= 0.5;
  r.outer_width *= 0.5;
  r.order += 2;
  return r;
}

RadialProfile solve_radial_profile(int N, double r_max, double tol, const RadialResolution& resolution) {
  if (N < 0) throw ConfigError("radial profile: multiplicity must be non-negative, got " + std::to_string(N));
  if (!(r_max >= 20.0)) throw ConfigError("radial profile: r_max must be at least 20");
  if (!(tol > 0.0)) throw ConfigError("radial profile: tolerance must be positive");
  if (resolution.order < 4) throw ConfigError("radial profile: element order must be at least 4");

  RadialResolution res = resolution;
  double last_residual = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt, res = res.refined()) {
    const Discretisation disc = make_discretisation(r_max, res);
    NewtonOutcome outcome = newton(disc, N, r_max);
    if (!outcome.converged) {
      last_residual = outcome.residual;
      continue;
    }
    const double between = off_node_residual(disc, N, outcome.w);
    last_residual = between;
    if (between > tol) continue;

    RadialProfile prof;
    prof.multiplicity = N;
    prof.r_max = r_max;
    prof.tolerance = tol;
    prof.resolution = res;
    prof.breakpoints = disc.breakpoints;
    prof.nodes = disc.nodes;
    prof.w.assign(outcome.w.data(), outcome.w.data() + outcome.w.size());
    prof.w_prime.assign(prof.w.size(), 0.0);
    const int p = res.order;
    for (int e = disc.elements() - 1; e >= 0; --e) {
      Eigen::VectorXd seg(p + 1);
      for (int k = 0; k <= p; ++k) seg[k] = outcome.w[e * p + k] - outcome.w[e * p];
      const Eigen::VectorXd d = disc.d1[e] * seg;
      for (int k = 0; k <= p; ++k) prof.w_prime[e * p + k] = d[k];
    }
    prof.w_prime[0] = 0.0;
    prof.max_residual = between;
    prof.newton_iterations = outcome.iterations;
    // U is only known to absolute rounding accuracy, so the K0 amplitude is
    // read off where U is still well above that floor.
    prof.tail_amplitude = 0.0;
    const double r_match = std::min(15.0, 0.5 * r_max);
    prof.tail_amplitude = eval_profile(prof, r_match).U / std::cyl_bessel_k(0.0, r_match);

    for (std::size_t k = 1; k < prof.nodes.size(); ++k) {
      const double U = log_weight(N, prof.nodes[k]) + prof.w[k];
      if (N > 0 && !(U < 0.0))
        throw ConvergenceError("radial profile: U is not negative at r = " + std::to_string(prof.nodes[k]));
    }
    fill_decay_constants(prof);
    return prof;
  }
  std::ostringstream msg;
  msg << "radial profile N=" << N << ": residual " << last_residual << " above tolerance " << tol
      << " after refinement";
  throw ConvergenceError(msg.str());
}

ProfileSample eval_profile(const RadialProfile& prof, double r) {
  r = std::abs(r);
  const int N = prof.multiplicity;
  ProfileSample s;
  if (r > prof.r_max) {
    s.U = prof.tail_amplitude * std::cyl_bessel_k(0.0, r);
    s.U_prime = -prof.tail_amplitude * std::cyl_bessel_k(1.0, r);
    s.w = s.U - log_weight(N, r);
    s.w_prime = s.U_prime - 2.0 * N / r;
    s.one_minus_exp_U = -std::expm1(s.U);
    return s;
  }
  const int p = prof.resolution.order;
  const ReferenceElement& ref = cached_reference(p);
  const int e = element_of(prof, r);
  const double a = prof.breakpoints[e], b = prof.breakpoints[e + 1];
  const double xi = std::clamp((2.0 * r - a - b) / (b - a), -1.0, 1.0);
  s.w = interpolate(ref, prof.w.data() + e * p, xi);
  s.w_prime = interpolate(ref, prof.w_prime.data() + e * p, xi);
  if (r == 0.0) {
    s.w_prime = 0.0;
    if (N > 0) {
      s.U = -std::numeric_limits<double>::infinity();
      s.U_prime = std::numeric_limits<double>::infinity();
      s.one_minus_exp_U = 1.0;
    } else {
      s.U = s.w;
      s.one_minus_exp_U = -std::expm1(s.w);
    }
    return s;
  }
  s.U = log_weight(N, r) + s.w;
  s.U_prime = 2.0 * N / r + s.w_prime;
  s.one_minus_exp_U = -std::expm1(s.U);
  return s;
}

double profile_flux(const RadialProfile& prof) {
  const int m = prof.resolution.order + 6;
  const auto [x, wts] = gauss_legendre(m);
  double acc = 0.0;
  for (std::size_t e = 0; e + 1 < prof.breakpoints.size(); ++e) {
    const double a = prof.breakpoints[e], b = prof.breakpoints[e + 1];
    double part = 0.0;
    for (int k = 0; k < m; ++k) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * x[k];
      part += wts[k] * eval_profile(prof, r).one_minus_exp_U * r;
    }
    acc += 0.5 * (b - a) * part;
  }
  // 1 - e^U = -U to second order in the tail, and int_R^inf K0(r) r dr = R K1(R).
  const double R = prof.r_max;
  const double tail = -prof.tail_amplitude * R * std::cyl_bessel_k(1.0, R);
  return 2.0 * pi * (acc + tail);
}

std::vector<ModeEigenvalue> check_nondegeneracy(const RadialProfile& prof, int l_max, double r_max,
                                                int grid_points) {
  if (l_max < 0) throw ConfigError("nondegeneracy: l_max must be non-negative");
  if (grid_points < 10) throw ConfigError("nondegeneracy: need at least 10 grid points");
  const int n = grid_points;
  // Cell-centred radii (i - 1/2) h with the Dirichlet wall at r_max on the node after the last.
  const double h = r_max / (n + 0.5);
  Eigen::VectorXd r(n), potential(n);
  for (int i = 0; i < n; ++i) {
    r[i] = (i + 0.5) * h;
    const ProfileSample s = eval_profile(prof, r[i]);
    potential[i] = std::exp(log_weight(prof.multiplicity, r[i]) + s.w);
  }
  std::vector<ModeEigenvalue> out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (int l = 0; l <= l_max; ++l) {
    Eigen::VectorXd diag(n), sub(n - 1);
    for (int i = 0; i < n; ++i) {
      const double r_minus = i * h;
      const double r_plus = (i + 1) * h;
      diag[i] = (r_minus + r_plus) / (r[i] * h * h) + double(l * l) / (r[i] * r[i]) + potential[i];
      if (i + 1 < n) sub[i] = -r_plus / (h * h * std::sqrt(r[i] * r[i + 1]));
    }
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("nondegeneracy: eigen solve failed");
    out.push_back({l, es.eigenvalues().minCoeff()});
  }
  return out;
}

void save_profile(const RadialProfile& prof, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path) {
  {
    std::FILE* f = std::fopen(csv_path.c_str(), "w");
    if (!f) throw IoError("cannot write " + csv_path.string());
    std::fprintf(f, "r,w,w_prime\n");
    for (std::size_t k = 0; k < prof.nodes.size(); ++k)
      std::fprintf(f, "%.17g,%.17g,%.17g\n", prof.nodes[k], prof.w[k], prof.w_prime[k]);
    if (std::fclose(f) != 0) throw IoError("cannot write " + csv_path.string());
  }
  nlohmann::ordered_json j;
  j["N"] = prof.multiplicity;
  j["r_max"] = prof.r_max;
  j["tolerance"] = prof.tolerance;
  j["achieved_residual"] = prof.max_residual;
  j["decay_C"] = prof.decay_C;
  j["decay_alpha"] = prof.decay_alpha;
  j["decay_bound_r_min"] = 1.0;
  j["tail_amplitude"] = prof.tail_amplitude;
  j["newton_iterations"] = prof.newton_iterations;
  j["order"] = prof.resolution.order;
  j["inner_width"] = prof.resolution.inner_width;
  j["inner_radius"] = prof.resolution.inner_radius;
  j["outer_width"] = prof.resolution.outer_width;
  j["breakpoints"] = prof.breakpoints;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + json_path.string());
}

RadialProfile load_profile(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  std::ifstream jin(json_path);
  if (!jin) throw IoError("cannot read " + json_path.string());
  nlohmann::json j;
  try {
    jin >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed profile sidecar " + json_path.string() + ": " + e.what());
  }
  RadialProfile prof;
  try {
    prof.multiplicity = j.at("N").get<int>();
    prof.r_max = j.at("r_max").get<double>();
    prof.tolerance = j.at("tolerance").get<double>();
    prof.max_residual = j.at("achieved_residual").get<double>();
    prof.decay_C = j.at("decay_C").get<double>();
    prof.decay_alpha = j.at("decay_alpha").get<double>();
    prof.tail_amplitude = j.at("tail_amplitude").get<double>();
    prof.newton_iterations = j.at("newton_iterations").get<int>();
    prof.resolution.order = j.at("order").get<int>();
    prof.resolution.inner_width = j.at("inner_width").get<double>();
    prof.resolution.inner_radius = j.at("inner_radius").get<double>();
    prof.resolution.outer_width = j.at("outer_width").get<double>();
    prof.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  } catch (const std::exception& e) {
    throw IoError("profile sidecar " + json_path.string() + " is missing fields: " + e.what());
  }
  std::ifstream cin(csv_path);
  if (!cin) throw IoError("cannot read " + csv_path.string());
  std::string line;
  std::getline(cin, line);
  if (line != "r,w,w_prime") throw IoError("unexpected profile CSV header in " + csv_path.string());
  while (std::getline(cin, line)) {
    if (line.empty()) continue;
    double r = 0, w = 0, wp = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &r, &w, &wp) != 3)
      throw IoError("malformed profile CSV row in " + csv_path.string());
    prof.nodes.push_back(r);
    prof.w.push_back(w);
    prof.w_prime.push_back(wp);
  }
  const std::size_t expected = (prof.breakpoints.size() - 1) * prof.resolution.order + 1;
  if (prof.breakpoints.size() < 2 || prof.nodes.size() != expected)
    throw IoError("profile CSV " + csv_path.string() + " does not match its element layout");
  return prof;
}

}  // namespace vortexglue
