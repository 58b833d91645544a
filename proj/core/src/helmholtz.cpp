#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "vortexglue/errors.hpp"
#include "vortexglue/field_grid.hpp"

namespace vortexglue {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealBuffer {
  explicit RealBuffer(std::size_t n) : data(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~RealBuffer() { fftw_free(data); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* data;
};

struct ComplexBuffer {
  explicit ComplexBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~ComplexBuffer() { fftw_free(data); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

struct SpectralHelmholtz::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

SpectralHelmholtz::SpectralHelmholtz(int nx, int ny, double h, Boundary boundary, double shift)
    : nx_(nx), ny_(ny), boundary_(boundary), plans_(new Plans) {
  using std::numbers::pi;
  const double c = 4.0 / (h * h);
  if (boundary == Boundary::Periodic) {
    const int hx = nx / 2 + 1;
    inverse_symbol_.resize(static_cast<std::size_t>(ny) * hx);
    const double norm = 1.0 / (static_cast<double>(nx) * ny);
    for (int ky = 0; ky < ny; ++ky) {
      const double sy = std::sin(pi * ky / ny);
      for (int kx = 0; kx < hx; ++kx) {
        const double sx = std::sin(pi * kx / nx);
        const double lambda = shift + c * (sx * sx + sy * sy);
        inverse_symbol_[static_cast<std::size_t>(ky) * hx + kx] = lambda > 0.0 ? norm / lambda : 0.0;
      }
    }
    RealBuffer in(static_cast<std::size_t>(nx) * ny);
    ComplexBuffer out(static_cast<std::size_t>(ny) * hx);
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_2d(ny, nx, in.data, out.data, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r_2d(ny, nx, out.data, in.data, FFTW_ESTIMATE);
  } else {
    inverse_symbol_.resize(static_cast<std::size_t>(nx) * ny);
    const double norm = 1.0 / (4.0 * (nx + 1.0) * (ny + 1.0));
    for (int ky = 0; ky < ny; ++ky) {
      const double sy = std::sin(pi * (ky + 1) / (2.0 * (ny + 1)));
      for (int kx = 0; kx < nx; ++kx) {
        const double sx = std::sin(pi * (kx + 1) / (2.0 * (nx + 1)));
        inverse_symbol_[static_cast<std::size_t>(ky) * nx + kx] = norm / (shift + c * (sx * sx + sy * sy));
      }
    }
    RealBuffer in(static_cast<std::size_t>(nx) * ny);
    RealBuffer out(static_cast<std::size_t>(nx) * ny);
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_r2r_2d(ny, nx, in.data, out.data, FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  }
  if (!plans_->forward || (boundary == Boundary::Periodic && !plans_->backward)) {
    delete plans_;
    throw ConvergenceError("helmholtz: FFT planning failed");
  }
}

SpectralHelmholtz::~SpectralHelmholtz() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
  delete plans_;
}

void SpectralHelmholtz::solve(std::span<const double> rhs, std::span<double> out) const {
  const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
  RealBuffer work(n);
  std::copy(rhs.begin(), rhs.end(), work.data);
  if (boundary_ == Boundary::Periodic) {
    const std::size_t m = static_cast<std::size_t>(ny_) * (nx_ / 2 + 1);
    ComplexBuffer spec(m);
    fftw_execute_dft_r2c(plans_->forward, work.data, spec.data);
    for (std::size_t k = 0; k < m; ++k) {
      spec.data[k][0] *= inverse_symbol_[k];
      spec.data[k][1] *= inverse_symbol_[k];
    }
    fftw_execute_dft_c2r(plans_->backward, spec.data, work.data);
    std::copy(work.data, work.data + n, out.begin());
  } else {
    RealBuffer spec(n);
    fftw_execute_r2r(plans_->forward, work.data, spec.data);
    for (std::size_t k = 0; k < n; ++k) spec.data[k] *= inverse_symbol_[k];
    fftw_execute_r2r(plans_->forward, spec.data, work.data);
    std::copy(work.data, work.data + n, out.begin());
  }
}

ScalarField helmholtz_solve(const ScalarField& rhs) {
  const GridGeometry& g = rhs.geometry();
  for (double v : rhs.data())
    if (!std::isfinite(v)) throw ConfigError("helmholtz_solve: right-hand side is not finite");
  SpectralHelmholtz solver(g.nx, g.ny, g.h, g.boundary, 1.0);
  ScalarField out(g);
  solver.solve(rhs.values(), out.values());
  return out;
}

}  // namespace vortexglue
