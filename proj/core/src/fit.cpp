#include "vortexglue/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace vortexglue {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  LinearFit fit;
  fit.samples = x.size();
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {
LinearFit fit_transformed(std::span<const double> delta, std::span<const double> y, bool power) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < delta.size() && i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    xs.push_back(power ? std::log(delta[i]) : 1.0 / delta[i]);
    ys.push_back(std::log(y[i]));
  }
  return fit_line(xs, ys);
}
}  // namespace

LinearFit fit_exponential_law(std::span<const double> delta, std::span<const double> y) {
  return fit_transformed(delta, y, false);
}

LinearFit fit_power_law(std::span<const double> delta, std::span<const double> y) {
  return fit_transformed(delta, y, true);
}

}  // namespace vortexglue
