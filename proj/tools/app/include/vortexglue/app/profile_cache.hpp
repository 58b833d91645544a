#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vortexglue/ansatz.hpp"
#include "vortexglue/radial_profile.hpp"

namespace vortexglue::app {

/// On-disk store of radial profiles keyed by (N, r_max, tol, h), where h is
/// the inner element width of the requested resolution. Each entry is
/// guarded by an advisory file lock, so concurrent processes sharing the
/// directory compute a missing profile once. An empty directory disables
/// the cache.
class ProfileCache {
public:
  explicit ProfileCache(std::filesystem::path directory);

  struct Stats {
    int hits = 0;
    int misses = 0;
  };

  std::shared_ptr<const RadialProfile> get(int N, double r_max, double tol,
                                           const RadialResolution& resolution = {});
  ProfileSet profiles_for(const VortexConfiguration& config, double r_max, double tol);

  /// check_nondegeneracy, cached next to the profile it was computed from.
  std::vector<ModeEigenvalue> modes(const RadialProfile& profile, double tol, int l_max, int grid_points);

  Stats stats() const;
  const std::filesystem::path& directory() const { return directory_; }
  static std::string key(int N, double r_max, double tol, double h);

private:
  std::filesystem::path directory_;
  mutable std::mutex mutex_;
  Stats stats_;
};

}  // namespace vortexglue::app
