#include "vortexglue/app/profile_cache.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

#include "vortexglue/errors.hpp"

namespace vortexglue::app {
namespace {

// Exclusive advisory lock held for the lifetime of the object.
class FileLock {
public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

private:
  int fd_ = -1;
};

void publish(const std::filesystem::path& tmp, const std::filesystem::path& final_path) {
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into the cache: " + ec.message());
}

}  // namespace

ProfileCache::ProfileCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  if (directory_.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw IoError("cannot create cache directory " + directory_.string() + ": " + ec.message());
}

std::string ProfileCache::key(int N, double r_max, double tol, double h) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "profile_N%d_rmax%.12g_tol%.12g_h%.12g", N, r_max, tol, h);
  return buf;
}

std::shared_ptr<const RadialProfile> ProfileCache::get(int N, double r_max, double tol,
                                                       const RadialResolution& resolution) {
  if (directory_.empty()) {
    std::lock_guard lock(mutex_);
    ++stats_.misses;
    return std::make_shared<const RadialProfile>(solve_radial_profile(N, r_max, tol, resolution));
  }
  const std::string stem = key(N, r_max, tol, resolution.inner_width);
  const auto csv = directory_ / (stem + ".csv");
  const auto side = directory_ / (stem + ".json");
  FileLock lock(directory_ / (stem + ".lock"));
  if (std::filesystem::exists(csv) && std::filesystem::exists(side)) {
    try {
      auto prof = std::make_shared<const RadialProfile>(load_profile(csv, side));
      if (prof->multiplicity == N) {
        std::lock_guard guard(mutex_);
        ++stats_.hits;
        return prof;
      }
    } catch (const std::exception&) {
      // unreadable entry: recompute and overwrite
    }
  }
  auto prof = std::make_shared<const RadialProfile>(solve_radial_profile(N, r_max, tol, resolution));
  const auto tmp_csv = directory_ / (stem + ".csv.tmp");
  const auto tmp_side = directory_ / (stem + ".json.tmp");
  save_profile(*prof, tmp_csv, tmp_side);
  publish(tmp_csv, csv);
  publish(tmp_side, side);
  std::lock_guard guard(mutex_);
  ++stats_.misses;
  return prof;
}

ProfileSet ProfileCache::profiles_for(const VortexConfiguration& config, double r_max, double tol) {
  std::set<int> ms;
  for (const auto& v : config.vortices) ms.insert(v.multiplicity);
  ProfileSet set;
  for (int m : ms) set[m] = get(m, r_max, tol);
  return set;
}

std::vector<ModeEigenvalue> ProfileCache::modes(const RadialProfile& profile, double tol, int l_max,
                                                int grid_points) {
  if (directory_.empty()) return check_nondegeneracy(profile, l_max, profile.r_max, grid_points);
  const std::string stem = key(profile.multiplicity, profile.r_max, tol, profile.resolution.inner_width) +
                           "_modes_l" + std::to_string(l_max) + "_n" + std::to_string(grid_points);
  const auto path = directory_ / (stem + ".json");
  FileLock lock(directory_ / (stem + ".lock"));
  if (std::filesystem::exists(path)) {
    try {
      std::ifstream in(path);
      const auto j = nlohmann::json::parse(in);
      std::vector<ModeEigenvalue> out;
      for (const auto& e : j.at("modes")) out.push_back({e.at("l").get<int>(), e.at("lambda_min").get<double>()});
      if (static_cast<int>(out.size()) == l_max + 1) return out;
    } catch (const std::exception&) {
      // recompute below
    }
  }
  const auto out = check_nondegeneracy(profile, l_max, profile.r_max, grid_points);
  nlohmann::ordered_json j;
  j["multiplicity"] = profile.multiplicity;
  j["grid_points"] = grid_points;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& m : out) list.push_back({{"l", m.l}, {"lambda_min", m.lambda_min}});
  j["modes"] = list;
  const auto tmp = directory_ / (stem + ".json.tmp");
  {
    std::ofstream o(tmp);
    if (!o) throw IoError("cannot write " + tmp.string());
    o << j.dump(2) << '\n';
  }
  publish(tmp, path);
  return out;
}

ProfileCache::Stats ProfileCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

}  // namespace vortexglue::app
