#include "vortexglue/app/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vortexglue/errors.hpp"

namespace vortexglue::app {
namespace {

using json = nlohmann::json;

class Schema {
public:
  std::vector<std::string> errors;

  void error(const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); }

  // Flags keys of `obj` outside `allowed`.
  void keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!ok.count(it.key())) error(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }

  bool object(const json& parent, const char* key, const std::string& where) {
    if (!parent.contains(key)) return false;
    if (!parent.at(key).is_object()) {
      error(where, "must be an object");
      return false;
    }
    return true;
  }

  void number(const json& obj, const char* key, const std::string& where, double& out, bool positive) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(where, "must be a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (positive && !(x > 0.0))) {
      error(where, positive ? "must be > 0" : "must be finite");
      return;
    }
    out = x;
  }

  void integer(const json& obj, const char* key, const std::string& where, int& out, int min_value) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(where, "must be an integer");
      return;
    }
    const auto x = v.get<long long>();
    if (x < min_value || x > 1000000000) {
      error(where, "must be >= " + std::to_string(min_value));
      return;
    }
    out = static_cast<int>(x);
  }

  void boolean(const json& obj, const char* key, const std::string& where, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) {
      error(where, "must be true or false");
      return;
    }
    out = obj.at(key).get<bool>();
  }

  void string(const json& obj, const char* key, const std::string& where, std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) {
      error(where, "must be a string");
      return;
    }
    out = obj.at(key).get<std::string>();
  }
};

void read_domain(Schema& s, const json& d, Domain& domain) {
  s.keys(d, "domain", {"boundary", "lx", "ly"});
  std::string boundary = "periodic";
  s.string(d, "boundary", "domain.boundary", boundary);
  if (boundary == "periodic")
    domain.boundary = Boundary::Periodic;
  else if (boundary == "dirichlet")
    domain.boundary = Boundary::Dirichlet;
  else
    s.error("domain.boundary", "must be \"periodic\" or \"dirichlet\"");
  if (!d.contains("lx")) s.error("domain.lx", "required");
  if (!d.contains("ly")) s.error("domain.ly", "required");
  s.number(d, "lx", "domain.lx", domain.lx, true);
  s.number(d, "ly", "domain.ly", domain.ly, true);
}

void read_vortices(Schema& s, const json& list, std::vector<Vortex>& vortices) {
  if (!list.is_array()) {
    s.error("vortices", "must be an array");
    return;
  }
  if (list.empty()) s.error("vortices", "at least one vortex is required");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string where = "vortices[" + std::to_string(k) + "]";
    const json& v = list[k];
    if (!v.is_object()) {
      s.error(where, "must be an object");
      continue;
    }
    s.keys(v, where, {"x", "y", "m"});
    Vortex vortex;
    double x = NAN, y = NAN;
    if (!v.contains("x")) s.error(where + ".x", "required");
    if (!v.contains("y")) s.error(where + ".y", "required");
    s.number(v, "x", where + ".x", x, false);
    s.number(v, "y", where + ".y", y, false);
    vortex.position = Vec2(x, y);
    s.integer(v, "m", where + ".m", vortex.multiplicity, 1);
    vortices.push_back(vortex);
  }
}

void read_solver(Schema& s, const json& o, SolverOptions& opt) {
  s.keys(o, "solver",
         {"tol", "max_iter", "strategy", "preconditioner", "h", "linear_tol", "krylov_max_iter", "divergence_window"});
  s.number(o, "tol", "solver.tol", opt.tol, true);
  s.integer(o, "max_iter", "solver.max_iter", opt.max_iter, 1);
  std::string strategy = strategy_name(opt.strategy);
  s.string(o, "strategy", "solver.strategy", strategy);
  if (strategy == "frozen")
    opt.strategy = Strategy::Frozen;
  else if (strategy == "newton")
    opt.strategy = Strategy::Newton;
  else
    s.error("solver.strategy", "must be \"frozen\" or \"newton\"");
  s.boolean(o, "preconditioner", "solver.preconditioner", opt.use_preconditioner);
  s.number(o, "h", "solver.h", opt.h, true);
  s.number(o, "linear_tol", "solver.linear_tol", opt.linear_tol, true);
  s.integer(o, "krylov_max_iter", "solver.krylov_max_iter", opt.krylov_max_iter, 1);
  s.integer(o, "divergence_window", "solver.divergence_window", opt.divergence_window, 1);
}

void read_sweep(Schema& s, const json& o, SweepSettingsBlock& sweep) {
  s.keys(o, "sweep", {"deltas", "test_function", "measure_plain"});
  if (o.contains("deltas")) {
    const json& d = o.at("deltas");
    if (!d.is_array() || d.empty()) {
      s.error("sweep.deltas", "must be a non-empty array of numbers");
    } else {
      sweep.deltas.clear();
      for (std::size_t k = 0; k < d.size(); ++k) {
        double x = 0.0;
        const std::string where = "sweep.deltas[" + std::to_string(k) + "]";
        if (!d[k].is_number()) {
          s.error(where, "must be a number");
          continue;
        }
        x = d[k].get<double>();
        if (!(x > 0.0) || !std::isfinite(x)) s.error(where, "delta must be > 0");
        sweep.deltas.push_back(x);
      }
    }
  }
  if (s.object(o, "test_function", "sweep.test_function")) {
    const json& t = o.at("test_function");
    s.keys(t, "sweep.test_function", {"vortex", "inner", "outer"});
    TestFunctionSpec spec;
    s.integer(t, "vortex", "sweep.test_function.vortex", spec.vortex, 0);
    if (!t.contains("inner") || !t.contains("outer")) s.error("sweep.test_function", "inner and outer are required");
    s.number(t, "inner", "sweep.test_function.inner", spec.inner, true);
    s.number(t, "outer", "sweep.test_function.outer", spec.outer, true);
    if (spec.outer <= spec.inner) s.error("sweep.test_function", "outer must exceed inner");
    sweep.test_function = spec;
  }
  s.boolean(o, "measure_plain", "sweep.measure_plain", sweep.measure_plain);
}

RunConfig from_json(const json& root) {
  Schema s;
  RunConfig rc;
  if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
  s.keys(root, "",
         {"command", "domain", "vortices", "delta", "r0", "solver", "profile", "radial", "sweep", "gauge", "audit",
          "output", "cache", "threads", "seed"});

  std::string command = "solve";
  s.string(root, "command", "command", command);
  if (command == "radial")
    rc.command = Command::Radial;
  else if (command == "solve")
    rc.command = Command::Solve;
  else if (command == "sweep")
    rc.command = Command::Sweep;
  else if (command == "gauge")
    rc.command = Command::Gauge;
  else if (command == "audit")
    rc.command = Command::Audit;
  else
    s.error("command", "must be one of radial, solve, sweep, gauge, audit");

  const bool needs_vortices = rc.command != Command::Radial;
  if (s.object(root, "domain", "domain"))
    read_domain(s, root.at("domain"), rc.config.domain);
  else if (needs_vortices)
    s.error("domain", "required");
  if (root.contains("vortices"))
    read_vortices(s, root.at("vortices"), rc.config.vortices);
  else if (needs_vortices)
    s.error("vortices", "required");
  rc.has_vortices = root.contains("domain") && root.contains("vortices");

  if (root.contains("delta")) {
    const json& d = root.at("delta");
    if (!d.is_number() || !(d.get<double>() > 0.0))
      s.error("delta", "must be a number > 0");
    else
      rc.config.delta = d.get<double>();
  }
  if (root.contains("r0")) {
    double r0 = 0.0;
    s.number(root, "r0", "r0", r0, true);
    if (r0 > 0.0) rc.config.r0 = r0;
  }
  if (s.object(root, "solver", "solver")) read_solver(s, root.at("solver"), rc.solver);
  if (s.object(root, "profile", "profile")) {
    const json& p = root.at("profile");
    s.keys(p, "profile", {"r_max", "tol"});
    s.number(p, "r_max", "profile.r_max", rc.profile.r_max, true);
    s.number(p, "tol", "profile.tol", rc.profile.tol, true);
    if (rc.profile.r_max < 10.0) s.error("profile.r_max", "must be >= 10");
  }
  if (s.object(root, "radial", "radial")) {
    const json& r = root.at("radial");
    s.keys(r, "radial", {"multiplicities", "l_max", "grid_points"});
    if (r.contains("multiplicities")) {
      const json& m = r.at("multiplicities");
      if (!m.is_array() || m.empty()) {
        s.error("radial.multiplicities", "must be a non-empty array of integers");
      } else {
        for (std::size_t k = 0; k < m.size(); ++k) {
          if (!m[k].is_number_integer() || m[k].get<long long>() < 0 || m[k].get<long long>() > 64)
            s.error("radial.multiplicities[" + std::to_string(k) + "]", "must be an integer in [0, 64]");
          else
            rc.radial.multiplicities.push_back(m[k].get<int>());
        }
      }
    }
    s.integer(r, "l_max", "radial.l_max", rc.radial.l_max, 0);
    s.integer(r, "grid_points", "radial.grid_points", rc.radial.grid_points, 50);
  }
  if (s.object(root, "sweep", "sweep")) read_sweep(s, root.at("sweep"), rc.sweep);
  if (s.object(root, "gauge", "gauge")) {
    const json& g = root.at("gauge");
    s.keys(g, "gauge", {"sign", "fit_window"});
    std::string sign = "upper";
    s.string(g, "sign", "gauge.sign", sign);
    if (sign == "upper")
      rc.gauge.sign = VortexSign::Upper;
    else if (sign == "lower")
      rc.gauge.sign = VortexSign::Lower;
    else
      s.error("gauge.sign", "must be \"upper\" or \"lower\"");
    if (g.contains("fit_window")) {
      const json& w = g.at("fit_window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() ||
          !(w[0].get<double>() > 0.0) || !(w[1].get<double>() > w[0].get<double>()))
        s.error("gauge.fit_window", "must be [r_min, r_max] with 0 < r_min < r_max");
      else {
        rc.gauge.fit_r_min = w[0].get<double>();
        rc.gauge.fit_r_max = w[1].get<double>();
      }
    }
  }
  if (s.object(root, "audit", "audit")) {
    const json& a = root.at("audit");
    s.keys(a, "audit", {"samples", "modes"});
    s.integer(a, "samples", "audit.samples", rc.audit.samples, 1);
    s.integer(a, "modes", "audit.modes", rc.audit.modes, 1);
  }
  std::string path;
  if (root.contains("output")) {
    s.string(root, "output", "output", path);
    if (!path.empty()) rc.output = path;
  }
  path.clear();
  if (root.contains("cache")) {
    s.string(root, "cache", "cache", path);
    if (!path.empty()) rc.cache = path;
  }
  s.integer(root, "threads", "threads", rc.threads, 0);
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned())
      s.error("seed", "must be a non-negative integer");
    else
      rc.seed = root.at("seed").get<std::uint64_t>();
  }

  if (s.errors.empty() && rc.has_vortices) {
    try {
      rc.config.validate();
    } catch (const ConfigError& e) {
      s.errors.push_back(e.what());
    }
    if (rc.sweep.test_function && rc.sweep.test_function->vortex >= static_cast<int>(rc.config.vortices.size()))
      s.error("sweep.test_function.vortex", "no such vortex");
  }
  if (!s.errors.empty()) {
    std::ostringstream msg;
    msg << "config has " << s.errors.size() << " error(s):";
    for (const auto& e : s.errors) msg << "\n  " << e;
    throw ConfigError(msg.str());
  }
  return rc;
}

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::Radial: return "radial";
    case Command::Solve: return "solve";
    case Command::Sweep: return "sweep";
    case Command::Gauge: return "gauge";
    case Command::Audit: return "audit";
  }
  return "?";
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(root);
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found or unreadable: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string config_to_json(const RunConfig& rc) {
  nlohmann::ordered_json j;
  j["command"] = command_name(rc.command);
  if (rc.has_vortices) {
    const Domain& d = rc.config.domain;
    j["domain"] = {{"boundary", d.boundary == Boundary::Periodic ? "periodic" : "dirichlet"},
                   {"lx", d.lx},
                   {"ly", d.ly}};
    nlohmann::ordered_json vs = nlohmann::ordered_json::array();
    for (const auto& v : rc.config.vortices)
      vs.push_back({{"x", v.position.x()}, {"y", v.position.y()}, {"m", v.multiplicity}});
    j["vortices"] = vs;
    j["delta"] = rc.config.delta;
    if (rc.config.r0) j["r0"] = *rc.config.r0;
  }
  const SolverOptions& o = rc.solver;
  j["solver"] = {{"tol", o.tol},
                 {"max_iter", o.max_iter},
                 {"strategy", strategy_name(o.strategy)},
                 {"preconditioner", o.use_preconditioner},
                 {"h", o.h},
                 {"linear_tol", o.linear_tol},
                 {"krylov_max_iter", o.krylov_max_iter},
                 {"divergence_window", o.divergence_window}};
  j["profile"] = {{"r_max", rc.profile.r_max}, {"tol", rc.profile.tol}};
  nlohmann::ordered_json radial;
  if (!rc.radial.multiplicities.empty()) radial["multiplicities"] = rc.radial.multiplicities;
  radial["l_max"] = rc.radial.l_max;
  radial["grid_points"] = rc.radial.grid_points;
  j["radial"] = radial;
  nlohmann::ordered_json sweep;
  sweep["deltas"] = rc.sweep.deltas;
  if (rc.sweep.test_function)
    sweep["test_function"] = {{"vortex", rc.sweep.test_function->vortex},
                              {"inner", rc.sweep.test_function->inner},
                              {"outer", rc.sweep.test_function->outer}};
  sweep["measure_plain"] = rc.sweep.measure_plain;
  j["sweep"] = sweep;
  j["gauge"] = {{"sign", rc.gauge.sign == VortexSign::Upper ? "upper" : "lower"},
                {"fit_window", {rc.gauge.fit_r_min, rc.gauge.fit_r_max}}};
  j["audit"] = {{"samples", rc.audit.samples}, {"modes", rc.audit.modes}};
  j["seed"] = rc.seed;
  return j.dump(2);
}

}  // namespace vortexglue::app
