#pragma once

#include <span>
#include <vector>

namespace vortexglue {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// ln y against 1/delta. Non-positive y entries are dropped.
LinearFit fit_exponential_law(std::span<const double> delta, std::span<const double> y);

/// ln y against ln delta. Non-positive y entries are dropped.
LinearFit fit_power_law(std::span<const double> delta, std::span<const double> y);

}  // namespace vortexglue
