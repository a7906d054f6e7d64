#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/solver.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

struct WeightedCost {
  double integral = 0.0;  // int_{t0}^{T} exp(-lambda t) F(t) dt
  double tail = 0.0;      // exp(-lambda T) sup_{t<=T}|F| / lambda; 0 when lambda == 0
};

namespace detail {

// phi1(x) = (1 - exp(-x))/x and phi2(x) = (1 - (1+x) exp(-x))/x^2 evaluated
// without cancellation; they tend to 1 and 1/2 at x = 0.
inline double phi1(double x) { return x == 0.0 ? 1.0 : -std::expm1(-x) / x; }

inline double phi2(double x) {
  if (x < 1e-3) return 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
  return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

}  // namespace detail

/// Discounted cost of a piecewise-linear scalar series: every segment is
/// integrated against exp(-lambda t) in closed form, so the only error is
/// the linear interpolation between records. Duplicated record times (jump
/// seams) are zero-length segments and integrate to zero; the jump itself
/// shows up through the records that follow it. Non-finite values poison
/// the result to +infinity.
inline WeightedCost weighted_cost_series(const std::vector<SeriesRecord>& series, double lambda,
                                         double horizon) {
  if (series.empty()) throw std::invalid_argument("weighted_cost: empty series");
  if (!(lambda >= 0.0)) throw std::invalid_argument("weighted_cost: lambda must be >= 0");
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i].t < series[i - 1].t)
      throw std::invalid_argument("weighted_cost: series times must be nondecreasing");
  if (series.back().t < horizon - 1e-9 * std::max(1.0, std::abs(horizon)))
    throw std::invalid_argument("weighted_cost: series ends before the horizon");

  WeightedCost out;
  double sup = std::abs(series.front().cost);
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double t1 = series[i - 1].t;
    double t2 = series[i].t;
    const double f1 = series[i - 1].cost;
    double f2 = series[i].cost;
    if (!std::isfinite(f1) || !std::isfinite(f2)) {
      out.integral = std::numeric_limits<double>::infinity();
      out.tail = std::numeric_limits<double>::infinity();
      return out;
    }
    if (t1 >= horizon) break;
    if (t2 > horizon) {  // clip the final partial segment at the horizon
      f2 = f1 + (f2 - f1) * (horizon - t1) / (t2 - t1);
      t2 = horizon;
    }
    sup = std::max(sup, std::abs(f2));
    const double dt = t2 - t1;
    if (dt == 0.0) continue;
    const double x = lambda * dt;
    const double slope = (f2 - f1) / dt;
    const double w = lambda > 0.0 ? std::exp(-lambda * t1) : 1.0;
    out.integral += w * dt * (f1 * detail::phi1(x) + slope * dt * detail::phi2(x));
  }
  if (lambda > 0.0) out.tail = std::exp(-lambda * horizon) * sup / lambda;
  return out;
}

/// Trajectory overload: the cost records are rebuilt from the stored energy
/// and entropy totals with the supplied equilibrium temperature, so the
/// score is a pure function of (trajectory, eq).
inline WeightedCost weighted_cost(const Trajectory& traj, const EquilibriumState& eq,
                                  const ThermoParams&, double horizon, double lambda = 1.0) {
  std::vector<SeriesRecord> scored = traj.series;
  for (SeriesRecord& r : scored) r.cost = r.energy - eq.theta_bar * r.entropy;
  return weighted_cost_series(scored, lambda, horizon);
}

/// Admissible means: the run completed, total energy never exceeded the
/// reference budget (beyond rounding) and total entropy never decreased.
inline bool admissible_trajectory(const Trajectory& t, const ThermoParams& p) {
  return t.valid && t.min_raw_defect >= -1e-10 * p.e_ref && t.entropy_violations == 0;
}

/// Index of the smallest admissible cost. Ties within tie_rel relative are
/// broken toward the lowest index; the relative comparison makes the winner
/// set invariant under positive rescaling of all costs. Returns -1 when
/// nothing is admissible; tie (when non-null) reports whether other
/// candidates fell inside the tie band.
inline int choose_argmin(const std::vector<double>& costs, const std::vector<char>& admissible,
                         double tie_rel = 1e-12, bool* tie = nullptr) {
  if (costs.size() != admissible.size())
    throw std::invalid_argument("choose_argmin: size mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < costs.size(); ++i)
    if (admissible[i]) best = std::min(best, costs[i]);
  if (tie) *tie = false;
  if (std::isinf(best) && best > 0.0) return -1;
  const double cut = best + tie_rel * std::abs(best);
  int chosen = -1;
  int in_band = 0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!admissible[i] || !(costs[i] <= cut)) continue;
    ++in_band;
    if (chosen < 0) chosen = static_cast<int>(i);
  }
  if (tie) *tie = in_band > 1;
  return chosen;
}

struct Candidate {
  std::string id;
  SchemeConfig scheme;
  Trajectory traj;
};

/// A finite computable stand-in for the set of solutions sharing one
/// initial state: every candidate trajectory starts from `init` bitwise.
struct CandidateSet {
  FieldState init;
  std::vector<Candidate> items;
};

/// Run one scheme per (id, config) pair from the shared initial state over
/// [init.time, horizon]. Candidates run concurrently; the result order and
/// every number in it are independent of the worker count.
inline CandidateSet run_candidates(const FieldState& init,
                                   const std::vector<std::pair<std::string, SchemeConfig>>& grid,
                                   const ThermoParams& tp, double horizon, int workers = 1,
                                   const RunOptions& opts = {}) {
  if (grid.empty()) throw std::invalid_argument("run_candidates: empty scheme grid");
  if (!(horizon >= init.time)) throw std::invalid_argument("run_candidates: horizon before start");
  CandidateSet set;
  set.init = init;
  set.items.resize(grid.size());
  parallel_for_indexed(grid.size(), workers, [&](std::size_t i) {
    set.items[i].id = grid[i].first;
    set.items[i].scheme = grid[i].second;
    set.items[i].traj = run(init, grid[i].second, tp, horizon, opts);
  });
  return set;
}

struct CandidateScore {
  std::string id;
  double cost = std::numeric_limits<double>::infinity();
  double tail = 0.0;
  bool admissible = false;
  bool chosen = false;
};

struct SelectionResult {
  int chosen_index = -1;
  bool tie = false;
  std::vector<CandidateScore> scores;  // candidate order preserved
};

/// Score every candidate by discounted cost and pick the admissible argmin
/// (lowest index on ties, tie flag set). Throws when nothing is admissible.
inline SelectionResult select_admissible(const CandidateSet& set, const EquilibriumState& eq,
                                         const ThermoParams& tp, double horizon,
                                         double lambda = 1.0, double tie_rel = 1e-12) {
  if (set.items.empty()) throw std::invalid_argument("select_admissible: empty candidate set");
  SelectionResult res;
  res.scores.resize(set.items.size());
  std::vector<double> costs(set.items.size());
  std::vector<char> adm(set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const Candidate& c = set.items[i];
    CandidateScore& s = res.scores[i];
    s.id = c.id;
    s.admissible = admissible_trajectory(c.traj, tp);
    if (c.traj.valid) {
      const WeightedCost wc = weighted_cost(c.traj, eq, tp, horizon, lambda);
      s.cost = wc.integral;
      s.tail = wc.tail;
    }
    costs[i] = s.cost;
    adm[i] = s.admissible ? 1 : 0;
  }
  res.chosen_index = choose_argmin(costs, adm, tie_rel, &res.tie);
  if (res.chosen_index < 0) throw std::runtime_error("select_admissible: no admissible candidate");
  res.scores[static_cast<std::size_t>(res.chosen_index)].chosen = true;
  return res;
}

struct BumpResult {
  FieldState field;
  double epsilon = 0.0;
  double defect = 0.0;           // energy gap closed by the bump
  double internal_energy = 0.0;  // pre-bump total internal energy
  double cost_jump = 0.0;        // eps*E_int - theta_bar c_v int rho log(1+eps)
};

/// Close a positive energy defect by raising the temperature a uniform
/// relative factor on the support: S_i += c_v rho_i log(1+eps) with
/// eps = defect / internal energy, rho and m untouched. The cost jump is
/// computed from its definition; it always stays below -G(defect) when the
/// internal energy fits under e_ref - defect.
inline BumpResult entropy_bump(const FieldState& f, const ThermoParams& tp) {
  const Totals tot = totals(f, tp);
  if (tot.energy.is_infinite()) throw std::domain_error("entropy_bump: INFINITE-energy field");
  const double defect = tp.e_ref - tot.energy.value();
  if (!(defect > 0.0)) throw std::domain_error("entropy_bump: defect must be positive");
  if (!(tot.mass >= tp.m_min)) throw std::domain_error("entropy_bump: field below minimum mass");

  const double vol = f.mesh.cell_volume();
  double internal = 0.0;
  for (const ConservedState& st : f.cells)
    internal += vol * tp.c_v * pressure(st.rho, st.S, tp).value();
  if (!(internal > 0.0)) throw std::domain_error("entropy_bump: no internal energy to scale");

  BumpResult out;
  out.field = f;
  out.epsilon = defect / internal;
  out.defect = defect;
  out.internal_energy = internal;
  const double log_factor = std::log1p(out.epsilon);
  double bumped_mass = 0.0;
  for (ConservedState& st : out.field.cells) {
    if (st.rho <= 0.0) continue;  // vacuum keeps S = 0
    st.S += tp.c_v * st.rho * log_factor;
    bumped_mass += vol * st.rho;
  }
  const EquilibriumState eq = equilibrium(tot.mass, tp.e_ref, f.mesh.domain_volume(), tp);
  out.cost_jump = out.epsilon * internal - eq.theta_bar * tp.c_v * bumped_mass * log_factor;
  return out;
}

/// Stitch a continuation onto a trajectory at time tau. The seam must have
/// identical rho and m and a nondecreasing S (identical for a plain
/// continuation, a positive jump after an entropy bump). A jump keeps both
/// seam records (duplicated time, first = left limit); a plain continuation
/// collapses them to one.
inline Trajectory concatenate(const Trajectory& traj, double tau, const Trajectory& continuation) {
  if (traj.snapshots.empty() || continuation.snapshots.empty())
    throw std::invalid_argument("concatenate: empty trajectory");
  const FieldState& a = traj.snapshots.back();
  const FieldState& b = continuation.snapshots.front();
  if (a.time != tau || b.time != tau)
    throw std::invalid_argument("concatenate: seam time mismatch");
  if (!(a.mesh == b.mesh)) throw std::invalid_argument("concatenate: seam mesh mismatch");
  bool same = true;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const ConservedState& x = a.cells[i];
    const ConservedState& y = b.cells[i];
    if (x.rho != y.rho || x.mom != y.mom)
      throw std::invalid_argument("concatenate: rho/m mismatch at the seam");
    if (y.S < x.S) throw std::invalid_argument("concatenate: entropy decreases at the seam");
    same = same && x.S == y.S;
  }
  Trajectory merged = traj;
  const std::size_t skip = same ? 1 : 0;
  merged.snapshots.insert(merged.snapshots.end(),
                          continuation.snapshots.begin() + static_cast<long>(skip),
                          continuation.snapshots.end());
  merged.series.insert(merged.series.end(), continuation.series.begin() + static_cast<long>(skip),
                       continuation.series.end());
  merged.valid = merged.valid && continuation.valid;
  if (!continuation.failure.empty()) merged.failure = continuation.failure;
  merged.entropy_violations += continuation.entropy_violations;
  merged.flagged_pressure_cells += continuation.flagged_pressure_cells;
  merged.flagged_vacuum_cells += continuation.flagged_vacuum_cells;
  merged.halvings += continuation.halvings;
  merged.min_raw_defect = std::min(merged.min_raw_defect, continuation.min_raw_defect);
  return merged;
}

struct PipelineConfig {
  SchemeConfig scheme;
  double bump_dt = 0.0;               // 0 disables defect reinjection
  double bump_threshold_rel = 1e-12;  // skip bumps below this fraction of e_ref
};

/// Evolve over [init.time, t_end], reinjecting the energy defect as an
/// entropy bump at every grid time k*bump_dt inside [init.time, t_end) with
/// k >= 1. The half-open window makes the map compose exactly: running to t
/// and then onward to t_end visits the same bump set as running straight
/// through, and evaluation at a bump time always returns the pre-bump
/// (left-limit) state.
inline Trajectory evolve_pipeline(const FieldState& init, double t_end, const PipelineConfig& pc,
                                  const ThermoParams& tp, const RunOptions& opts = {}) {
  if (t_end < init.time) throw std::invalid_argument("evolve_pipeline: t_end before start");
  std::vector<double> bumps;
  if (pc.bump_dt > 0.0) {
    if (t_end / pc.bump_dt > 1e6)
      throw std::invalid_argument("evolve_pipeline: bump_dt too small for the horizon");
    for (long k = 1;; ++k) {
      const double tau = static_cast<double>(k) * pc.bump_dt;
      if (tau >= t_end) break;
      if (tau >= init.time) bumps.push_back(tau);
    }
  }

  const double vol = init.mesh.domain_volume();
  const EquilibriumState eq = equilibrium(totals(init, tp).mass, tp.e_ref, vol, tp);

  Trajectory total;
  FieldState cur = init;
  bool have_total = false;

  auto leg_times = [&](double a, double b) {
    std::vector<double> out;
    for (double t : opts.snapshot_times)
      if (t > a && t <= b) out.push_back(t);
    return out;
  };
  auto append_leg = [&](double leg_end) {
    RunOptions leg_opts;
    leg_opts.snapshot_times = leg_times(cur.time, leg_end);
    leg_opts.snapshot_every_step = opts.snapshot_every_step;
    Trajectory leg = run(cur, pc.scheme, tp, leg_end, leg_opts);
    cur = leg.final_state();
    if (!have_total) {
      total = std::move(leg);
      have_total = true;
    } else {
      total = concatenate(total, total.snapshots.back().time, leg);
    }
    return total.valid;
  };
  auto append_jump = [&](const FieldState& post) {
    cur = post;
    total.snapshots.push_back(cur);
    const Totals t = totals(cur, tp);
    SeriesRecord r;
    r.t = cur.time;
    r.mass = t.mass;
    r.energy = t.energy.value();
    r.entropy = t.entropy;
    const double raw = tp.e_ref - r.energy;
    total.min_raw_defect = std::min(total.min_raw_defect, raw);
    r.defect = raw > 0.0 ? raw : 0.0;
    r.cost = r.energy - eq.theta_bar * r.entropy;
    total.series.push_back(r);
  };

  for (std::size_t i = 0; i <= bumps.size(); ++i) {
    const double leg_end = i < bumps.size() ? bumps[i] : t_end;
    if (leg_end > cur.time || !have_total) {
      if (!append_leg(leg_end)) return total;
    }
    if (i < bumps.size()) {
      const double raw = tp.e_ref - totals(cur, tp).energy.value();
      if (raw > pc.bump_threshold_rel * tp.e_ref) append_jump(entropy_bump(cur, tp).field);
    }
  }
  return total;
}

}  // namespace eulab
