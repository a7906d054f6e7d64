#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

enum class FluxKind { Rusanov, Hll };

/// Knobs that span the candidate family: flux, spatial order, CFL number,
/// extra interface dissipation and an optional deterministic dt jitter.
struct SchemeConfig {
  FluxKind flux = FluxKind::Rusanov;
  int order = 1;  // 1 or 2 (MUSCL-minmod)
  double cfl = 0.8;
  double artificial_viscosity = 0.0;
  std::uint64_t seed = 0;  // 0 disables the dt jitter
};

inline void validate_scheme(const SchemeConfig& cfg) {
  if (!(cfg.cfl > 0.0 && cfg.cfl < 1.0)) throw std::domain_error("scheme: cfl must be in (0,1)");
  if (cfg.order != 1 && cfg.order != 2) throw std::domain_error("scheme: order must be 1 or 2");
  if (!(cfg.artificial_viscosity >= 0.0))
    throw std::domain_error("scheme: artificial_viscosity must be >= 0");
}

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int cell) : std::runtime_error(what), cell_(cell) {}
  int cell() const { return cell_; }

 private:
  int cell_ = -1;
};

/// Max over cells of |u| + sqrt(gamma p / rho); vacuum cells contribute 0.
inline double max_wave_speed(const FieldState& f, const ThermoParams& p) {
  double s = 0.0;
  for (const ConservedState& st : f.cells) {
    if (st.rho < p.rho_vac) {
      if (total_energy(st, p).is_infinite())
        throw std::domain_error("max_wave_speed: INFINITE-energy cell");
      continue;
    }
    const double pr = pressure(st.rho, st.S, p).finite_value();
    const double u = std::sqrt(mom_norm2(st)) / st.rho;
    s = std::max(s, u + std::sqrt(p.gamma * pr / st.rho));
  }
  return s;
}

namespace detail {

struct Prim {
  double rho = 0.0, u0 = 0.0, u1 = 0.0, p = 0.0;
};

struct Cons4 {
  double rho = 0.0, m0 = 0.0, m1 = 0.0, E = 0.0;
};

constexpr double kPressureFloor = 1e-14;

inline double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

inline Cons4 cons_from_prim(const Prim& w, double c_v) {
  Cons4 c;
  c.rho = w.rho;
  c.m0 = w.rho * w.u0;
  c.m1 = w.rho * w.u1;
  c.E = c_v * w.p + 0.5 * w.rho * (w.u0 * w.u0 + w.u1 * w.u1);
  return c;
}

/// Physical flux along the axis whose velocity is u_n; (m_n, m_t) are the
/// normal and transverse momentum components in that sweep frame.
inline Cons4 axis_flux(const Prim& w, double c_v) {
  Cons4 f;
  const double mn = w.rho * w.u0;
  f.rho = mn;
  f.m0 = mn * w.u0 + w.p;
  f.m1 = mn * w.u1;
  f.E = (c_v * w.p + 0.5 * w.rho * (w.u0 * w.u0 + w.u1 * w.u1) + w.p) * w.u0;
  return f;
}

inline double sound_speed(const Prim& w, double gamma) {
  return w.rho > 0.0 ? std::sqrt(gamma * w.p / w.rho) : 0.0;
}

/// Numerical interface flux in the sweep frame (u0 normal, u1 transverse).
inline Cons4 interface_flux(const Prim& wl, const Prim& wr, const SchemeConfig& cfg,
                            const ThermoParams& tp) {
  const Cons4 ul = cons_from_prim(wl, tp.c_v);
  const Cons4 ur = cons_from_prim(wr, tp.c_v);
  const Cons4 fl = axis_flux(wl, tp.c_v);
  const Cons4 fr = axis_flux(wr, tp.c_v);
  const double cl = sound_speed(wl, tp.gamma);
  const double cr = sound_speed(wr, tp.gamma);
  const double smax = std::max(std::abs(wl.u0) + cl, std::abs(wr.u0) + cr);

  Cons4 f;
  if (cfg.flux == FluxKind::Rusanov) {
    const double diss = 0.5 * smax;
    f.rho = 0.5 * (fl.rho + fr.rho) - diss * (ur.rho - ul.rho);
    f.m0 = 0.5 * (fl.m0 + fr.m0) - diss * (ur.m0 - ul.m0);
    f.m1 = 0.5 * (fl.m1 + fr.m1) - diss * (ur.m1 - ul.m1);
    f.E = 0.5 * (fl.E + fr.E) - diss * (ur.E - ul.E);
  } else {
    const double sl = std::min(wl.u0 - cl, wr.u0 - cr);
    const double sr = std::max(wl.u0 + cl, wr.u0 + cr);
    if (sl >= 0.0) {
      f = fl;
    } else if (sr <= 0.0) {
      f = fr;
    } else {
      const double inv = 1.0 / (sr - sl);
      f.rho = (sr * fl.rho - sl * fr.rho + sl * sr * (ur.rho - ul.rho)) * inv;
      f.m0 = (sr * fl.m0 - sl * fr.m0 + sl * sr * (ur.m0 - ul.m0)) * inv;
      f.m1 = (sr * fl.m1 - sl * fr.m1 + sl * sr * (ur.m1 - ul.m1)) * inv;
      f.E = (sr * fl.E - sl * fr.E + sl * sr * (ur.E - ul.E)) * inv;
    }
  }
  if (cfg.artificial_viscosity > 0.0) {
    const double extra = 0.5 * cfg.artificial_viscosity * smax;
    f.rho -= extra * (ur.rho - ul.rho);
    f.m0 -= extra * (ur.m0 - ul.m0);
    f.m1 -= extra * (ur.m1 - ul.m1);
    f.E -= extra * (ur.E - ul.E);
  }
  return f;
}

}  // namespace detail

struct StepAttempt {
  std::optional<FieldState> state;
  int failed_cell = -1;
  long floored_cells = 0;
  long vacuum_cells = 0;
  bool ok() const { return state.has_value(); }
};

/// One conservative forward-Euler update with the given dt. Reflective walls
/// (normal momentum negated in the ghost mirror). S is rederived from the
/// updated (rho, m, E) through the EOS. Fails on negative density/pressure.
inline StepAttempt try_step(const FieldState& f, double dt, const SchemeConfig& cfg,
                            const ThermoParams& tp) {
  const Mesh& mesh = f.mesh;
  const int n = mesh.num_cells();
  StepAttempt out;

  // Primitive work array; vacuum convention applied to derived values only.
  std::vector<detail::Prim> prim(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const ConservedState& st = f.cells[static_cast<std::size_t>(c)];
    detail::Prim w;
    if (st.rho < tp.rho_vac) {
      w = detail::Prim{};  // exact vacuum
    } else {
      w.rho = st.rho;
      w.u0 = st.mom[0] / st.rho;
      w.u1 = st.mom[1] / st.rho;
      w.p = pressure(st.rho, st.S, tp).finite_value();
    }
    prim[static_cast<std::size_t>(c)] = w;
  }

  std::vector<detail::Cons4> du(static_cast<std::size_t>(n));

  // Sweep along each axis with the same time-level data (unsplit update).
  for (int axis = 0; axis < mesh.dim; ++axis) {
    const int nline = mesh.cells[axis];
    const int nperp = mesh.dim == 2 ? mesh.cells[1 - axis] : 1;
    const double lambda = dt / mesh.dx(axis);

    std::vector<detail::Prim> line(static_cast<std::size_t>(nline) + 2);
    std::vector<detail::Cons4> flux(static_cast<std::size_t>(nline) + 1);

    for (int q = 0; q < nperp; ++q) {
      // Gather the line in the sweep frame: u0 = normal, u1 = transverse.
      for (int i = 0; i < nline; ++i) {
        const int cell = axis == 0 ? mesh.index(i, q) : mesh.index(q, i);
        detail::Prim w = prim[static_cast<std::size_t>(cell)];
        if (axis == 1) std::swap(w.u0, w.u1);
        line[static_cast<std::size_t>(i) + 1] = w;
      }
      // Reflective ghosts: mirror with the normal velocity negated.
      line[0] = line[1];
      line[0].u0 = -line[0].u0;
      line[static_cast<std::size_t>(nline) + 1] = line[static_cast<std::size_t>(nline)];
      line[static_cast<std::size_t>(nline) + 1].u0 = -line[static_cast<std::size_t>(nline) + 1].u0;

      for (int i = 0; i <= nline; ++i) {
        detail::Prim wl = line[static_cast<std::size_t>(i)];
        detail::Prim wr = line[static_cast<std::size_t>(i) + 1];
        if (cfg.order == 2) {
          // minmod-limited linear reconstruction; ghosts keep zero slope.
          auto limited = [&](int k, auto member) -> double {
            if (k == 0 || k == nline + 1) return 0.0;
            const double wm = line[static_cast<std::size_t>(k) - 1].*member;
            const double wc = line[static_cast<std::size_t>(k)].*member;
            const double wp = line[static_cast<std::size_t>(k) + 1].*member;
            return detail::minmod(wc - wm, wp - wc);
          };
          for (auto member : {&detail::Prim::rho, &detail::Prim::u0, &detail::Prim::u1,
                              &detail::Prim::p}) {
            wl.*member += 0.5 * limited(i, member);
            wr.*member -= 0.5 * limited(i + 1, member);
          }
          if (wl.rho <= 0.0 || wl.p < 0.0 || wr.rho <= 0.0 || wr.p < 0.0) {
            // fall back to the unreconstructed pair at this interface
            wl = line[static_cast<std::size_t>(i)];
            wr = line[static_cast<std::size_t>(i) + 1];
          }
        }
        // Wall interfaces pair the interior face value with its exact
        // mirror, so the mass, energy and transverse-momentum wall fluxes
        // vanish bitwise for any reconstruction.
        if (i == 0) {
          wl = wr;
          wl.u0 = -wl.u0;
        } else if (i == nline) {
          wr = wl;
          wr.u0 = -wr.u0;
        }
        flux[static_cast<std::size_t>(i)] = detail::interface_flux(wl, wr, cfg, tp);
      }

      for (int i = 0; i < nline; ++i) {
        const int cell = axis == 0 ? mesh.index(i, q) : mesh.index(q, i);
        const detail::Cons4& fm = flux[static_cast<std::size_t>(i)];
        const detail::Cons4& fp = flux[static_cast<std::size_t>(i) + 1];
        detail::Cons4& d = du[static_cast<std::size_t>(cell)];
        d.rho -= lambda * (fp.rho - fm.rho);
        d.E -= lambda * (fp.E - fm.E);
        if (axis == 0) {
          d.m0 -= lambda * (fp.m0 - fm.m0);
          d.m1 -= lambda * (fp.m1 - fm.m1);
        } else {
          d.m1 -= lambda * (fp.m0 - fm.m0);  // sweep-normal is the y component
          d.m0 -= lambda * (fp.m1 - fm.m1);
        }
      }
    }
  }

  FieldState next = f;
  next.time = f.time + dt;
  for (int c = 0; c < n; ++c) {
    const detail::Cons4& d = du[static_cast<std::size_t>(c)];
    ConservedState& st = next.cells[static_cast<std::size_t>(c)];
    if (d.rho == 0.0 && d.m0 == 0.0 && d.m1 == 0.0 && d.E == 0.0) continue;  // exact steady cell

    const ConservedState& old = f.cells[static_cast<std::size_t>(c)];
    const detail::Prim& w = prim[static_cast<std::size_t>(c)];
    const double E_old = detail::cons_from_prim(w, tp.c_v).E;
    double rho = old.rho + d.rho;
    double m0 = old.mom[0] + d.m0;
    double m1 = old.mom[1] + d.m1;
    double E = E_old + d.E;

    if (rho < tp.rho_vac) {
      if (rho <= 0.0) {
        out.failed_cell = c;
        return out;
      }
      st = ConservedState{};  // vacuum convention
      ++out.vacuum_cells;
      continue;
    }
    double pr = (E - 0.5 * (m0 * m0 + m1 * m1) / rho) / tp.c_v;
    if (pr < 0.0) {
      out.failed_cell = c;
      return out;
    }
    if (pr < detail::kPressureFloor) {
      pr = detail::kPressureFloor;
      ++out.floored_cells;
    }
    st.rho = rho;
    st.mom = {m0, m1};
    st.S = rho * specific_entropy(rho, pr / rho, tp);
  }
  out.state = std::move(next);
  return out;
}

namespace detail {

inline double cfl_dt(const FieldState& f, const SchemeConfig& cfg, const ThermoParams& tp) {
  const double s = max_wave_speed(f, tp);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  double dt;
  if (f.mesh.dim == 1) {
    dt = cfg.cfl * f.mesh.dx(0) / s;
  } else {
    dt = cfg.cfl / (s / f.mesh.dx(0) + s / f.mesh.dx(1));
  }
  if (cfg.seed != 0) {
    // deterministic jitter keyed on (seed, t): restart-safe candidate variant
    std::uint64_t h = fnv1a64("dt-jitter");
    h = hash_combine(h, cfg.seed);
    h = hash_combine(h, bits_of(f.time));
    dt *= 1.0 - 0.1 * uniform_from_bits(h);
  }
  return dt;
}

constexpr int kMaxHalvings = 10;

}  // namespace detail

/// One CFL-sized step; on failure retries at halved dt (max 10 halvings)
/// and throws NumericError with the offending cell if all retries fail.
inline FieldState step(const FieldState& f, const SchemeConfig& cfg, const ThermoParams& tp,
                       int* halvings_used = nullptr) {
  validate_scheme(cfg);
  double dt = detail::cfl_dt(f, cfg, tp);
  if (std::isinf(dt)) return f;  // nothing moves
  int cell = -1;
  for (int k = 0; k <= detail::kMaxHalvings; ++k) {
    StepAttempt a = try_step(f, dt, cfg, tp);
    if (a.ok()) {
      if (halvings_used) *halvings_used = k;
      return *std::move(a.state);
    }
    cell = a.failed_cell;
    dt *= 0.5;
  }
  throw NumericError("step: positivity failure persists after 10 dt halvings (cell " +
                         std::to_string(cell) + ")",
                     cell);
}

struct SeriesRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double defect = 0.0;  // clipped at 0
  double cost = 0.0;    // F = energy - theta_bar * entropy
};

/// Time-indexed snapshots plus per-step scalar series. Snapshot times are
/// strictly increasing except for recorded jump points (duplicated time).
struct Trajectory {
  std::vector<FieldState> snapshots;
  std::vector<SeriesRecord> series;
  bool valid = true;
  std::string failure;           // set when valid == false
  long entropy_violations = 0;   // steps with a total-entropy decrease beyond tol
  long flagged_pressure_cells = 0;
  long flagged_vacuum_cells = 0;
  long halvings = 0;
  double min_raw_defect = std::numeric_limits<double>::infinity();

  const FieldState& final_state() const { return snapshots.back(); }

  /// Left limit at tau: the first snapshot recorded at tau (pre-jump entry at
  /// a duplicated seam time), or the latest one before tau.
  const FieldState& state_left(double tau) const {
    const FieldState* best = nullptr;
    for (const FieldState& s : snapshots) {
      if (s.time == tau) return s;
      if (s.time < tau) best = &s;
      if (s.time > tau) break;
    }
    if (!best) throw std::invalid_argument("state_left: tau precedes trajectory start");
    return *best;
  }

  /// Right limit at tau: the last snapshot recorded at tau (post-jump entry
  /// at a duplicated seam time). Requires an exact snapshot hit.
  const FieldState& state_right(double tau) const {
    const FieldState* hit = nullptr;
    for (const FieldState& s : snapshots) {
      if (s.time == tau) hit = &s;
      if (s.time > tau) break;
    }
    if (!hit) throw std::invalid_argument("state_right: no snapshot at tau");
    return *hit;
  }
};

struct RunOptions {
  std::vector<double> snapshot_times;  // absolute, within (t0, t_end]
  bool snapshot_every_step = false;
};

/// Advance from init.time to t_end with dt clipped to land exactly on every
/// requested snapshot time and on t_end. Deterministic for fixed inputs;
/// restarting from any snapshot with the same remaining clip times is
/// bitwise-identical to the uninterrupted run.
inline Trajectory run(const FieldState& init, const SchemeConfig& cfg, const ThermoParams& tp,
                      double t_end, const RunOptions& opts = {}) {
  validate_scheme(cfg);
  if (t_end < init.time) throw std::invalid_argument("run: t_end before initial time");
  std::vector<double> clips = opts.snapshot_times;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (i > 0 && clips[i] <= clips[i - 1])
      throw std::invalid_argument("run: snapshot_times must be strictly increasing");
    if (clips[i] <= init.time || clips[i] > t_end)
      throw std::invalid_argument("run: snapshot time outside (t0, t_end]");
  }
  if (clips.empty() || clips.back() != t_end) clips.push_back(t_end);

  Trajectory traj;
  const double volume = init.mesh.domain_volume();
  const Totals tot0 = totals(init, tp);
  const EquilibriumState eq = equilibrium(tot0.mass, tp.e_ref, volume, tp);

  auto record = [&](const FieldState& f, const Totals& t) {
    SeriesRecord r;
    r.t = f.time;
    r.mass = t.mass;
    r.energy = t.energy.value();
    r.entropy = t.entropy;
    const double raw = tp.e_ref - r.energy;
    traj.min_raw_defect = std::min(traj.min_raw_defect, raw);
    r.defect = raw > 0.0 ? raw : 0.0;
    r.cost = r.energy - eq.theta_bar * r.entropy;
    traj.series.push_back(r);
  };

  FieldState cur = init;
  traj.snapshots.push_back(cur);
  record(cur, tot0);
  if (t_end == init.time) return traj;

  std::size_t next_clip = 0;
  double prev_entropy = tot0.entropy;
  while (cur.time < t_end) {
    const double clip = clips[next_clip];
    double dt = detail::cfl_dt(cur, cfg, tp);
    bool clipped = false;
    if (cur.time + dt >= clip || std::isinf(dt)) {
      dt = clip - cur.time;
      clipped = true;
    }

    StepAttempt a;
    int k = 0;
    for (; k <= detail::kMaxHalvings; ++k) {
      a = try_step(cur, dt, cfg, tp);
      if (a.ok()) break;
      dt *= 0.5;
      clipped = false;
    }
    if (!a.ok()) {
      traj.valid = false;
      traj.failure = "positivity failure at t=" + format_g17(cur.time) + " cell " +
                     std::to_string(a.failed_cell);
      return traj;
    }
    traj.halvings += k;
    traj.flagged_pressure_cells += a.floored_cells;
    traj.flagged_vacuum_cells += a.vacuum_cells;

    cur = *std::move(a.state);
    if (clipped) cur.time = clip;  // land exactly on the clip time

    const Totals t = totals(cur, tp);
    record(cur, t);
    if (t.entropy < prev_entropy - 1e-10) ++traj.entropy_violations;
    prev_entropy = t.entropy;

    const bool at_clip = clipped;
    if (at_clip) ++next_clip;
    if (opts.snapshot_every_step || at_clip) traj.snapshots.push_back(cur);
  }
  // dedupe: when the final clip was also an every-step snapshot nothing to do;
  // ensure the final state is present exactly once at the back.
  if (traj.snapshots.back().time != cur.time) traj.snapshots.push_back(cur);
  return traj;
}

}  // namespace eulab
