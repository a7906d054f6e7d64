#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eulab/field.hpp"
#include "eulab/initial.hpp"
#include "eulab/solver.hpp"
#include "eulab/statistical.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

/// Configuration problems carry the offending field path in the message.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThermoConfig {
  double gamma = 1.4;
  std::optional<double> e_ref;    // empty = derive from the initial data
  std::optional<double> s_floor;  // empty = derive from the initial data
  double m_min = 1e-8;
  double rho_vac = 1e-12;
};

struct MeshConfig {
  int dim = 1;
  std::array<int, 2> cells = {200, 1};
  std::array<double, 2> extent = {1.0, 1.0};
};

struct InitialConfig {
  std::string family = "sod";  // sod | uniform | smooth-perturbation
  RiemannSetup riemann;
  UniformSetup uniform;
  SmoothSetup smooth;
};

struct SchemeEntry {
  std::string id;
  SchemeConfig scheme;
};

struct SelectionConfig {
  double horizon = 30.0;
  double lambda = 1.0;
  double tie_rel = 1e-12;
};

struct EnsembleConfig {
  int n = 8;
  std::uint64_t seed = 1;
  SamplerSpec sampler;
  std::vector<double> times;  // expectation sampling times, empty = auto grid
};

struct RunConfig {
  ThermoConfig thermo;
  MeshConfig mesh;
  InitialConfig initial;
  std::vector<SchemeEntry> schemes = {{"rusanov-1", SchemeConfig{}}};
  SelectionConfig selection;
  EnsembleConfig ensemble;
  double t_end = 0.2;
  std::vector<double> snapshot_times;  // empty = final time only
  double bump_dt = 0.0;
  double bump_threshold_rel = 1e-12;
  double defect_trace_constant = 1.0;  // scale applied to reported defect traces
  double t_supp = 0.0;                 // test-function support for residuals, 0 = t_end
  int workers = 1;
  std::string output_dir = "out";

  std::string canonical;          // normalized JSON, the hash input
  std::uint64_t config_hash = 0;  // FNV-1a of the canonical form
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::string& path,
                           std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) { found = true; break; }
    if (!found) throw ConfigError(path + "." + it.key() + ": unknown field");
  }
}

inline double get_num(const json& j, const std::string& path, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

inline int get_int(const json& j, const std::string& path, const char* key, int def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return j[key].get<int>();
}

inline std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                             std::uint64_t def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
    throw ConfigError(path + "." + key + ": expected a nonnegative integer");
  const auto v = j[key].get<long long>();
  if (v < 0) throw ConfigError(path + "." + key + ": expected a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

inline std::string get_str(const json& j, const std::string& path, const char* key,
                           const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

inline std::optional<double> get_auto(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  if (j[key].is_string()) {
    if (j[key].get<std::string>() == "auto") return std::nullopt;
    throw ConfigError(path + "." + key + ": expected a number or \"auto\"");
  }
  if (!j[key].is_number()) throw ConfigError(path + "." + key + ": expected a number or \"auto\"");
  return j[key].get<double>();
}

inline std::vector<double> get_times(const json& j, const std::string& path, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline FluxKind parse_flux(const std::string& name, const std::string& path) {
  if (name == "rusanov") return FluxKind::Rusanov;
  if (name == "hll") return FluxKind::Hll;
  throw ConfigError(path + ".flux: expected \"rusanov\" or \"hll\"");
}

inline const char* flux_name(FluxKind k) {
  return k == FluxKind::Rusanov ? "rusanov" : "hll";
}

}  // namespace detail

/// One-line summary of a scheme, used in reports.
inline std::string scheme_descriptor(const SchemeConfig& s) {
  std::ostringstream os;
  os << detail::flux_name(s.flux) << " order=" << s.order << " cfl=" << s.cfl
     << " av=" << s.artificial_viscosity << " seed=" << s.seed;
  return os.str();
}

/// Parse and validate a JSON config. Unknown fields and out-of-range values
/// fail with the dotted field path; defaults fill everything omitted. The
/// canonical form and its hash cover the effective settings.
inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  detail::reject_unknown(j, "config",
                         {"thermo", "mesh", "initial", "schemes", "selection", "ensemble",
                          "t_end", "snapshot_times", "bump_dt", "bump_threshold_rel",
                          "defect_trace_constant", "t_supp", "workers", "output_dir"});
  RunConfig c;

  if (j.contains("thermo")) {
    const json& t = j["thermo"];
    if (!t.is_object()) throw ConfigError("thermo: expected an object");
    detail::reject_unknown(t, "thermo", {"gamma", "e_ref", "s_floor", "m_min", "rho_vac"});
    c.thermo.gamma = detail::get_num(t, "thermo", "gamma", c.thermo.gamma);
    c.thermo.e_ref = detail::get_auto(t, "thermo", "e_ref");
    c.thermo.s_floor = detail::get_auto(t, "thermo", "s_floor");
    c.thermo.m_min = detail::get_num(t, "thermo", "m_min", c.thermo.m_min);
    c.thermo.rho_vac = detail::get_num(t, "thermo", "rho_vac", c.thermo.rho_vac);
  }
  if (!(c.thermo.gamma > 1.0)) throw ConfigError("thermo.gamma: must be > 1");
  if (!(c.thermo.m_min >= 0.0)) throw ConfigError("thermo.m_min: must be >= 0");
  if (!(c.thermo.rho_vac >= 0.0)) throw ConfigError("thermo.rho_vac: must be >= 0");
  if (c.thermo.e_ref && !(*c.thermo.e_ref > 0.0)) throw ConfigError("thermo.e_ref: must be > 0");

  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    if (!m.is_object()) throw ConfigError("mesh: expected an object");
    detail::reject_unknown(m, "mesh", {"dim", "cells", "extent"});
    c.mesh.dim = detail::get_int(m, "mesh", "dim", c.mesh.dim);
    if (m.contains("cells")) {
      if (!m["cells"].is_array() || m["cells"].empty() || m["cells"].size() > 2)
        throw ConfigError("mesh.cells: expected an array of 1 or 2 integers");
      for (std::size_t a = 0; a < m["cells"].size(); ++a) {
        if (!m["cells"][a].is_number_integer())
          throw ConfigError("mesh.cells: expected an array of 1 or 2 integers");
        c.mesh.cells[a] = m["cells"][a].get<int>();
      }
      if (m["cells"].size() == 1) c.mesh.cells[1] = 1;
    }
    if (m.contains("extent")) {
      if (!m["extent"].is_array() || m["extent"].empty() || m["extent"].size() > 2)
        throw ConfigError("mesh.extent: expected an array of 1 or 2 numbers");
      for (std::size_t a = 0; a < m["extent"].size(); ++a) {
        if (!m["extent"][a].is_number())
          throw ConfigError("mesh.extent: expected an array of 1 or 2 numbers");
        c.mesh.extent[a] = m["extent"][a].get<double>();
      }
      if (m["extent"].size() == 1) c.mesh.extent[1] = 1.0;
    }
  }
  if (c.mesh.dim != 1 && c.mesh.dim != 2) throw ConfigError("mesh.dim: must be 1 or 2");
  if (c.mesh.cells[0] < 1 || (c.mesh.dim == 2 && c.mesh.cells[1] < 1))
    throw ConfigError("mesh.cells: must be >= 1");
  if (c.mesh.dim == 1) c.mesh.cells[1] = 1;
  if (!(c.mesh.extent[0] > 0.0) || (c.mesh.dim == 2 && !(c.mesh.extent[1] > 0.0)))
    throw ConfigError("mesh.extent: must be > 0");

  if (j.contains("initial")) {
    const json& in = j["initial"];
    if (!in.is_object()) throw ConfigError("initial: expected an object");
    detail::reject_unknown(in, "initial",
                           {"family", "rho_l", "u_l", "p_l", "rho_r", "u_r", "p_r", "x_split",
                            "rho", "u0", "u1", "theta", "amplitude", "modes", "seed", "rho_bar",
                            "theta_bar"});
    c.initial.family = detail::get_str(in, "initial", "family", c.initial.family);
    RiemannSetup& r = c.initial.riemann;
    r.rho_l = detail::get_num(in, "initial", "rho_l", r.rho_l);
    r.u_l = detail::get_num(in, "initial", "u_l", r.u_l);
    r.p_l = detail::get_num(in, "initial", "p_l", r.p_l);
    r.rho_r = detail::get_num(in, "initial", "rho_r", r.rho_r);
    r.u_r = detail::get_num(in, "initial", "u_r", r.u_r);
    r.p_r = detail::get_num(in, "initial", "p_r", r.p_r);
    r.x_split = detail::get_num(in, "initial", "x_split", r.x_split);
    UniformSetup& u = c.initial.uniform;
    u.rho = detail::get_num(in, "initial", "rho", u.rho);
    u.u0 = detail::get_num(in, "initial", "u0", u.u0);
    u.u1 = detail::get_num(in, "initial", "u1", u.u1);
    u.theta = detail::get_num(in, "initial", "theta", u.theta);
    SmoothSetup& s = c.initial.smooth;
    s.amplitude = detail::get_num(in, "initial", "amplitude", s.amplitude);
    s.modes = detail::get_int(in, "initial", "modes", s.modes);
    s.seed = detail::get_u64(in, "initial", "seed", s.seed);
    s.rho_bar = detail::get_num(in, "initial", "rho_bar", s.rho_bar);
    s.theta_bar = detail::get_num(in, "initial", "theta_bar", s.theta_bar);
  }
  if (c.initial.family != "sod" && c.initial.family != "uniform" &&
      c.initial.family != "smooth-perturbation")
    throw ConfigError("initial.family: expected sod, uniform or smooth-perturbation");
  if (c.initial.family == "sod" && c.mesh.dim != 1)
    throw ConfigError("initial.family: sod requires mesh.dim = 1");

  if (j.contains("schemes")) {
    if (!j["schemes"].is_array() || j["schemes"].empty())
      throw ConfigError("schemes: expected a nonempty array");
    c.schemes.clear();
    int k = 0;
    for (const auto& sj : j["schemes"]) {
      const std::string path = "schemes[" + std::to_string(k++) + "]";
      if (!sj.is_object()) throw ConfigError(path + ": expected an object");
      detail::reject_unknown(sj, path, {"id", "flux", "order", "cfl",
                                        "artificial_viscosity", "seed"});
      SchemeEntry e;  // the struct defaults are the single source of truth
      e.scheme.flux = detail::parse_flux(
          detail::get_str(sj, path, "flux", detail::flux_name(e.scheme.flux)), path);
      e.scheme.order = detail::get_int(sj, path, "order", e.scheme.order);
      e.scheme.cfl = detail::get_num(sj, path, "cfl", e.scheme.cfl);
      e.scheme.artificial_viscosity =
          detail::get_num(sj, path, "artificial_viscosity", e.scheme.artificial_viscosity);
      e.scheme.seed = detail::get_u64(sj, path, "seed", e.scheme.seed);
      e.id = detail::get_str(sj, path, "id",
                             std::string(detail::flux_name(e.scheme.flux)) + "-" +
                                 std::to_string(e.scheme.order));
      if (e.scheme.order != 1 && e.scheme.order != 2)
        throw ConfigError(path + ".order: must be 1 or 2");
      if (!(e.scheme.cfl > 0.0 && e.scheme.cfl < 1.0))
        throw ConfigError(path + ".cfl: must be in (0, 1)");
      if (!(e.scheme.artificial_viscosity >= 0.0))
        throw ConfigError(path + ".artificial_viscosity: must be >= 0");
      c.schemes.push_back(std::move(e));
    }
  }

  if (j.contains("selection")) {
    const json& s = j["selection"];
    if (!s.is_object()) throw ConfigError("selection: expected an object");
    detail::reject_unknown(s, "selection", {"horizon", "lambda", "tie_rel"});
    c.selection.horizon = detail::get_num(s, "selection", "horizon", c.selection.horizon);
    c.selection.lambda = detail::get_num(s, "selection", "lambda", c.selection.lambda);
    c.selection.tie_rel = detail::get_num(s, "selection", "tie_rel", c.selection.tie_rel);
  }
  if (!(c.selection.horizon > 0.0)) throw ConfigError("selection.horizon: must be > 0");
  if (!(c.selection.lambda >= 0.0)) throw ConfigError("selection.lambda: must be >= 0");
  if (!(c.selection.tie_rel >= 0.0)) throw ConfigError("selection.tie_rel: must be >= 0");

  if (j.contains("ensemble")) {
    const json& e = j["ensemble"];
    if (!e.is_object()) throw ConfigError("ensemble: expected an object");
    detail::reject_unknown(e, "ensemble",
                           {"n", "seed", "family", "amplitude", "modes", "rho_bar", "theta_bar",
                            "times"});
    c.ensemble.n = detail::get_int(e, "ensemble", "n", c.ensemble.n);
    c.ensemble.seed = detail::get_u64(e, "ensemble", "seed", c.ensemble.seed);
    SamplerSpec& sp = c.ensemble.sampler;
    sp.family = detail::get_str(e, "ensemble", "family", sp.family);
    sp.amplitude = detail::get_num(e, "ensemble", "amplitude", sp.amplitude);
    sp.modes = detail::get_int(e, "ensemble", "modes", sp.modes);
    sp.rho_bar = detail::get_num(e, "ensemble", "rho_bar", sp.rho_bar);
    sp.theta_bar = detail::get_num(e, "ensemble", "theta_bar", sp.theta_bar);
    c.ensemble.times = detail::get_times(e, "ensemble", "times");
  }
  if (c.ensemble.n < 1) throw ConfigError("ensemble.n: must be >= 1");
  if (c.ensemble.sampler.family != "smooth-perturbation" &&
      c.ensemble.sampler.family != "uniform")
    throw ConfigError("ensemble.family: expected smooth-perturbation or uniform");
  for (std::size_t i = 0; i < c.ensemble.times.size(); ++i) {
    if (!(c.ensemble.times[i] >= 0.0)) throw ConfigError("ensemble.times: must be >= 0");
    if (i > 0 && c.ensemble.times[i] <= c.ensemble.times[i - 1])
      throw ConfigError("ensemble.times: must be strictly increasing");
  }

  c.t_end = detail::get_num(j, "config", "t_end", c.t_end);
  if (!(c.t_end > 0.0)) throw ConfigError("t_end: must be > 0");
  c.snapshot_times = detail::get_times(j, "config", "snapshot_times");
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) {
    if (!(c.snapshot_times[i] > 0.0 && c.snapshot_times[i] <= c.t_end))
      throw ConfigError("snapshot_times: must lie in (0, t_end]");
    if (i > 0 && c.snapshot_times[i] <= c.snapshot_times[i - 1])
      throw ConfigError("snapshot_times: must be strictly increasing");
  }
  c.bump_dt = detail::get_num(j, "config", "bump_dt", c.bump_dt);
  if (!(c.bump_dt >= 0.0)) throw ConfigError("bump_dt: must be >= 0");
  c.bump_threshold_rel = detail::get_num(j, "config", "bump_threshold_rel", c.bump_threshold_rel);
  if (!(c.bump_threshold_rel >= 0.0)) throw ConfigError("bump_threshold_rel: must be >= 0");
  c.defect_trace_constant =
      detail::get_num(j, "config", "defect_trace_constant", c.defect_trace_constant);
  if (!(c.defect_trace_constant > 0.0)) throw ConfigError("defect_trace_constant: must be > 0");
  c.t_supp = detail::get_num(j, "config", "t_supp", c.t_supp);
  if (!(c.t_supp >= 0.0)) throw ConfigError("t_supp: must be >= 0");
  c.workers = detail::get_int(j, "config", "workers", c.workers);
  if (c.workers < 1) throw ConfigError("workers: must be >= 1");
  c.output_dir = detail::get_str(j, "config", "output_dir", c.output_dir);

  // Canonical form: every effective field, keys sorted by the json object.
  json n;
  n["thermo"]["gamma"] = c.thermo.gamma;
  n["thermo"]["e_ref"] = c.thermo.e_ref ? json(*c.thermo.e_ref) : json("auto");
  n["thermo"]["s_floor"] = c.thermo.s_floor ? json(*c.thermo.s_floor) : json("auto");
  n["thermo"]["m_min"] = c.thermo.m_min;
  n["thermo"]["rho_vac"] = c.thermo.rho_vac;
  n["mesh"]["dim"] = c.mesh.dim;
  n["mesh"]["cells"] = c.mesh.dim == 2 ? json{c.mesh.cells[0], c.mesh.cells[1]}
                                       : json{c.mesh.cells[0]};
  n["mesh"]["extent"] = c.mesh.dim == 2 ? json{c.mesh.extent[0], c.mesh.extent[1]}
                                        : json{c.mesh.extent[0]};
  n["initial"]["family"] = c.initial.family;
  if (c.initial.family == "sod") {
    const RiemannSetup& r = c.initial.riemann;
    n["initial"]["rho_l"] = r.rho_l;
    n["initial"]["u_l"] = r.u_l;
    n["initial"]["p_l"] = r.p_l;
    n["initial"]["rho_r"] = r.rho_r;
    n["initial"]["u_r"] = r.u_r;
    n["initial"]["p_r"] = r.p_r;
    n["initial"]["x_split"] = r.x_split;
  } else if (c.initial.family == "uniform") {
    const UniformSetup& u = c.initial.uniform;
    n["initial"]["rho"] = u.rho;
    n["initial"]["u0"] = u.u0;
    n["initial"]["u1"] = u.u1;
    n["initial"]["theta"] = u.theta;
  } else {
    const SmoothSetup& s = c.initial.smooth;
    n["initial"]["amplitude"] = s.amplitude;
    n["initial"]["modes"] = s.modes;
    n["initial"]["seed"] = s.seed;
    n["initial"]["rho_bar"] = s.rho_bar;
    n["initial"]["theta_bar"] = s.theta_bar;
  }
  n["schemes"] = json::array();
  for (const SchemeEntry& e : c.schemes) {
    json sj;
    sj["id"] = e.id;
    sj["flux"] = detail::flux_name(e.scheme.flux);
    sj["order"] = e.scheme.order;
    sj["cfl"] = e.scheme.cfl;
    sj["artificial_viscosity"] = e.scheme.artificial_viscosity;
    sj["seed"] = e.scheme.seed;
    n["schemes"].push_back(sj);
  }
  n["selection"]["horizon"] = c.selection.horizon;
  n["selection"]["lambda"] = c.selection.lambda;
  n["selection"]["tie_rel"] = c.selection.tie_rel;
  n["ensemble"]["n"] = c.ensemble.n;
  n["ensemble"]["seed"] = c.ensemble.seed;
  n["ensemble"]["family"] = c.ensemble.sampler.family;
  n["ensemble"]["amplitude"] = c.ensemble.sampler.amplitude;
  n["ensemble"]["modes"] = c.ensemble.sampler.modes;
  n["ensemble"]["rho_bar"] = c.ensemble.sampler.rho_bar;
  n["ensemble"]["theta_bar"] = c.ensemble.sampler.theta_bar;
  n["ensemble"]["times"] = c.ensemble.times;
  n["t_end"] = c.t_end;
  n["snapshot_times"] = c.snapshot_times;
  n["bump_dt"] = c.bump_dt;
  n["bump_threshold_rel"] = c.bump_threshold_rel;
  n["defect_trace_constant"] = c.defect_trace_constant;
  n["t_supp"] = c.t_supp;
  n["workers"] = c.workers;
  n["output_dir"] = c.output_dir;
  c.canonical = n.dump();
  c.config_hash = fnv1a64(c.canonical);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline Mesh make_mesh_from(const MeshConfig& m) {
  return make_mesh(m.dim, m.cells, m.extent);
}

/// Realize the configured initial family on the configured mesh.
inline InitialData build_initial(const RunConfig& c) {
  const Mesh mesh = make_mesh_from(c.mesh);
  if (c.initial.family == "sod") return make_riemann(mesh, c.thermo.gamma, c.initial.riemann);
  if (c.initial.family == "uniform") return make_uniform(mesh, c.thermo.gamma, c.initial.uniform);
  return make_smooth(mesh, c.thermo.gamma, c.initial.smooth);
}

/// Resolve the thermodynamic parameters, filling auto fields from the
/// realized initial data (continuum energy and pointwise entropy floor).
inline ThermoParams make_thermo(const RunConfig& c, const InitialData& init) {
  ThermoParams tp;
  tp.gamma = c.thermo.gamma;
  tp.c_v = 1.0 / (c.thermo.gamma - 1.0);
  tp.e_ref = c.thermo.e_ref ? *c.thermo.e_ref : init.e_ref;
  tp.s_floor = c.thermo.s_floor ? *c.thermo.s_floor : init.s_floor;
  // Realized fields carry the quadrature rounding of the continuum mass;
  // keep the floor attainable for them.
  tp.m_min = std::min(c.thermo.m_min, (1.0 - 1e-9) * init.mass);
  tp.rho_vac = c.thermo.rho_vac;
  return tp;
}

}  // namespace eulab
