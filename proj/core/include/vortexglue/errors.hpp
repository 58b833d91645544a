#pragma once

#include <stdexcept>
#include <string>

namespace vortexglue {

/// Invalid user input: bad multiplicities, overlapping vortices, malformed config.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vortexglue
