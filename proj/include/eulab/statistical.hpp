#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eulab/diagnostics.hpp"
#include "eulab/field.hpp"
#include "eulab/initial.hpp"
#include "eulab/selection.hpp"
#include "eulab/solver.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

struct MeasureAtom {
  double weight = 1.0;
  FieldState state;
  bool ok = true;  // false when a pipeline failed for this atom
};

/// Finite atomic probability measure on phase space; atoms carry their own
/// absolute time.
struct DiscreteMeasure {
  std::vector<MeasureAtom> atoms;
  std::uint64_t seed = 0;  // provenance when sampled
  std::string sampler;     // descriptor, empty for explicitly built measures
};

/// Weights form a probability vector and every atom sits inside the
/// phase-space set: valid cells, entropy floor, minimum mass and the
/// energy budget int E <= e_ref (within rounding).
inline void validate_measure(const DiscreteMeasure& m, const ThermoParams& tp) {
  if (m.atoms.empty()) throw std::invalid_argument("measure: no atoms");
  double sum = 0.0;
  for (const MeasureAtom& a : m.atoms) {
    if (!(a.weight >= 0.0)) throw std::invalid_argument("measure: negative weight");
    sum += a.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("measure: weights must sum to 1");
  for (const MeasureAtom& a : m.atoms) {
    validate_field(a.state, tp);
    const ExtendedValue e = totals(a.state, tp).energy;
    if (e.is_infinite() || e.value() > tp.e_ref * (1.0 + 1e-12))
      throw std::invalid_argument("measure: atom exceeds the energy budget");
  }
}

/// Bounded continuous observable: a tanh-clipped transform of either one
/// cosine-basis coordinate of a field component or of a conserved total.
/// The damping exponent scales mode (k0,k1) by (1+|k|^2)^(-damping/2).
struct Observable {
  enum class Kind { Coordinate, Total };
  enum class Quantity { Rho, Mom0, Mom1, Entropy, TotalMass, TotalEnergy, TotalEntropy, Defect };
  Kind kind = Kind::Total;
  Quantity quantity = Quantity::Defect;
  std::array<int, 2> mode = {0, 0};
  double bound = 1.0;
  double damping = 0.0;
  std::string id;
};

inline double observe(const Observable& obs, const FieldState& f, const ThermoParams& tp) {
  if (!(obs.bound > 0.0)) throw std::invalid_argument("observable: bound must be positive");
  double raw = 0.0;
  if (obs.kind == Observable::Kind::Total) {
    const Totals t = totals(f, tp);
    switch (obs.quantity) {
      case Observable::Quantity::TotalMass: raw = t.mass; break;
      case Observable::Quantity::TotalEnergy:
        raw = t.energy.is_infinite() ? std::numeric_limits<double>::infinity() : t.energy.value();
        break;
      case Observable::Quantity::TotalEntropy: raw = t.entropy; break;
      case Observable::Quantity::Defect: raw = energy_defect(f, tp.e_ref, tp).value; break;
      default: throw std::invalid_argument("observable: total kind needs a total quantity");
    }
  } else {
    const Mesh& mesh = f.mesh;
    const double damp =
        std::pow(1.0 + double(obs.mode[0]) * obs.mode[0] + double(obs.mode[1]) * obs.mode[1],
                 -0.5 * obs.damping);
    const double vol = mesh.cell_volume();
    double acc = 0.0;
    for (int j = 0; j < (mesh.dim == 2 ? mesh.cells[1] : 1); ++j) {
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const ConservedState& c = f.cells[static_cast<std::size_t>(mesh.index(i, j))];
        double v = 0.0;
        switch (obs.quantity) {
          case Observable::Quantity::Rho: v = c.rho; break;
          case Observable::Quantity::Mom0: v = c.mom[0]; break;
          case Observable::Quantity::Mom1: v = c.mom[1]; break;
          case Observable::Quantity::Entropy: v = c.S; break;
          default: throw std::invalid_argument("observable: coordinate kind needs a field quantity");
        }
        const auto ctr = mesh.center(i, j);
        double basis = obs.mode[0] == 0
                           ? 1.0
                           : std::cos(obs.mode[0] * detail::kPi * ctr[0] / mesh.extent[0]);
        if (mesh.dim == 2 && obs.mode[1] != 0)
          basis *= std::cos(obs.mode[1] * detail::kPi * ctr[1] / mesh.extent[1]);
        acc += vol * v * basis;
      }
    }
    raw = damp * acc;
  }
  return obs.bound * std::tanh(raw / obs.bound);
}

/// Defect observable with a clip scale far above any attainable defect, so
/// orderings and near-zero values survive the clipping untouched.
inline Observable defect_observable(const ThermoParams& tp) {
  Observable o;
  o.kind = Observable::Kind::Total;
  o.quantity = Observable::Quantity::Defect;
  o.bound = 10.0 * tp.e_ref;
  o.id = "defect";
  return o;
}

/// Fixed-order weighted sum over atoms; throws if any atom is flagged.
inline double expectation(const Observable& obs, const DiscreteMeasure& m,
                          const ThermoParams& tp) {
  if (m.atoms.empty()) throw std::invalid_argument("expectation: no atoms");
  double acc = 0.0;
  for (const MeasureAtom& a : m.atoms) {
    if (!a.ok) throw std::runtime_error("expectation: measure carries a failed atom");
    acc += a.weight * observe(obs, a.state, tp);
  }
  return acc;
}

/// View of a measure at one cell: weights plus per-atom cell states.
inline EnsembleAtPoint ensemble_at(const DiscreteMeasure& m, int cell) {
  EnsembleAtPoint e;
  for (const MeasureAtom& a : m.atoms) {
    if (cell < 0 || cell >= static_cast<int>(a.state.cells.size()))
      throw std::invalid_argument("ensemble_at: cell index out of range");
    e.weights.push_back(a.weight);
    e.states.push_back(a.state.cells[static_cast<std::size_t>(cell)]);
  }
  return e;
}

/// Convex combination of measures: atom lists concatenate with scaled
/// weights, exactly linear by construction.
inline DiscreteMeasure mix_measures(const std::vector<std::pair<double, DiscreteMeasure>>& parts) {
  DiscreteMeasure out;
  double sum = 0.0;
  for (const auto& [lam, m] : parts) {
    if (!(lam >= 0.0)) throw std::invalid_argument("mix_measures: negative coefficient");
    sum += lam;
    for (const MeasureAtom& a : m.atoms)
      out.atoms.push_back({lam * a.weight, a.state, a.ok});
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("mix_measures: coefficients must sum to 1");
  return out;
}

/// The per-atom solution map: either one scheme evolved directly (with
/// optional defect reinjection on the bump grid) or a candidate family run
/// to the selection horizon with the admissible argmin evaluated at the
/// target time. Bump scheduling composes only for a single scheme, hence
/// the restriction.
struct StatPipeline {
  std::vector<std::pair<std::string, SchemeConfig>> candidates = {{"rusanov-1", SchemeConfig{}}};
  double lambda = 1.0;
  double horizon = 30.0;
  double bump_dt = 0.0;
  double bump_threshold_rel = 1e-12;
  int workers = 1;
};

inline void validate_pipeline(const StatPipeline& p) {
  if (p.candidates.empty()) throw std::invalid_argument("pipeline: empty candidate list");
  if (p.bump_dt > 0.0 && p.candidates.size() > 1)
    throw std::invalid_argument("pipeline: bump scheduling requires a single-scheme pipeline");
  if (!(p.lambda >= 0.0)) throw std::invalid_argument("pipeline: lambda must be >= 0");
  for (const auto& c : p.candidates) validate_scheme(c.second);
}

/// Everything that can change a result, excluding the worker count.
inline std::uint64_t pipeline_hash(const StatPipeline& p) {
  std::uint64_t h = fnv1a64("pipeline");
  h = hash_combine(h, p.candidates.size());
  for (const auto& [id, s] : p.candidates) {
    h = hash_combine(h, fnv1a64(id));
    h = hash_combine(h, static_cast<std::uint64_t>(s.flux));
    h = hash_combine(h, static_cast<std::uint64_t>(s.order));
    h = hash_combine(h, bits_of(s.cfl));
    h = hash_combine(h, bits_of(s.artificial_viscosity));
    h = hash_combine(h, s.seed);
  }
  h = hash_combine(h, bits_of(p.lambda));
  h = hash_combine(h, bits_of(p.horizon));
  h = hash_combine(h, bits_of(p.bump_dt));
  h = hash_combine(h, bits_of(p.bump_threshold_rel));
  return h;
}

/// Memo for the per-atom map keyed by (initial-state hash, pipeline hash,
/// target-time bits). Values are pure functions of the key inputs, so
/// caching never changes a result.
class PushforwardCache {
 public:
  std::optional<FieldState> get(std::uint64_t init, std::uint64_t pipe, double t) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key(init, pipe, t));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(std::uint64_t init, std::uint64_t pipe, double t, const FieldState& st) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(key(init, pipe, t), st);
  }
  std::size_t size() const { return map_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::array<std::uint64_t, 3>& k) const {
      return static_cast<std::size_t>(hash_combine(hash_combine(k[0], k[1]), k[2]));
    }
  };
  static std::array<std::uint64_t, 3> key(std::uint64_t a, std::uint64_t b, double t) {
    return {a, b, bits_of(t)};
  }
  std::mutex mu_;
  std::unordered_map<std::array<std::uint64_t, 3>, FieldState, KeyHash> map_;
};

namespace detail {

/// Evolve one state to the absolute target time through the pipeline and
/// return the left-limit state there.
inline FieldState apply_map(const FieldState& init, double target, const StatPipeline& pipe,
                            const ThermoParams& tp, PushforwardCache* cache) {
  if (target == init.time) return init;  // identity, bitwise
  const std::uint64_t init_hash = hash_field(init);
  const std::uint64_t pipe_hash_v = pipeline_hash(pipe);
  if (cache) {
    if (auto hit = cache->get(init_hash, pipe_hash_v, target)) return *hit;
  }
  FieldState out;
  if (pipe.candidates.size() == 1) {
    PipelineConfig pc;
    pc.scheme = pipe.candidates.front().second;
    pc.bump_dt = pipe.bump_dt;
    pc.bump_threshold_rel = pipe.bump_threshold_rel;
    Trajectory traj = evolve_pipeline(init, target, pc, tp);
    if (!traj.valid) throw NumericError("pipeline: " + traj.failure, -1);
    out = traj.state_left(target);
  } else {
    const double horizon = init.time + pipe.horizon;
    if (target > horizon)
      throw std::invalid_argument("pipeline: target beyond the selection horizon");
    RunOptions opts;
    if (target < horizon) opts.snapshot_times = {target};
    CandidateSet set = run_candidates(init, pipe.candidates, tp, horizon, 1, opts);
    const EquilibriumState eq =
        equilibrium(totals(init, tp).mass, tp.e_ref, init.mesh.domain_volume(), tp);
    const SelectionResult sel = select_admissible(set, eq, tp, horizon, pipe.lambda);
    out = set.items[static_cast<std::size_t>(sel.chosen_index)].traj.state_left(target);
  }
  if (cache) cache->put(init_hash, pipe_hash_v, target, out);
  return out;
}

}  // namespace detail

/// Push the measure forward by duration t: every atom moves through the
/// selected solution map, weights unchanged. Atom failures flag the atom
/// instead of aborting the measure. Deterministic for any worker count.
inline DiscreteMeasure pushforward(const DiscreteMeasure& sigma, double t,
                                   const StatPipeline& pipe, const ThermoParams& tp,
                                   PushforwardCache* cache = nullptr) {
  if (!(t >= 0.0)) throw std::invalid_argument("pushforward: negative duration");
  validate_pipeline(pipe);
  DiscreteMeasure out = sigma;
  parallel_for_indexed(out.atoms.size(), pipe.workers, [&](std::size_t i) {
    MeasureAtom& a = out.atoms[i];
    if (!a.ok) return;
    try {
      a.state = detail::apply_map(a.state, a.state.time + t, pipe, tp, cache);
    } catch (const NumericError&) {
      a.ok = false;
    }
  });
  return out;
}

struct SemigroupReport {
  double max_discrepancy = 0.0;  // max over atoms and cells of |direct - composed|
  int atoms = 0;
  bool all_ok = true;
};

/// Compare moving by t+s in one go against s first, then t. With the
/// half-open bump window and exact clip landings, both paths visit the same
/// bump set and the same step schedule, so the discrepancy is pure restart
/// error (0 for bitwise-exact restarts).
inline SemigroupReport check_semigroup(const DiscreteMeasure& sigma, double t, double s,
                                       const StatPipeline& pipe, const ThermoParams& tp,
                                       PushforwardCache* cache = nullptr) {
  if (!(t >= 0.0) || !(s >= 0.0)) throw std::invalid_argument("check_semigroup: negative time");
  const DiscreteMeasure direct = pushforward(sigma, t + s, pipe, tp, cache);
  const DiscreteMeasure hop = pushforward(pushforward(sigma, s, pipe, tp, cache), t, pipe, tp,
                                          cache);
  SemigroupReport rep;
  rep.atoms = static_cast<int>(sigma.atoms.size());
  for (std::size_t i = 0; i < direct.atoms.size(); ++i) {
    const MeasureAtom& a = direct.atoms[i];
    const MeasureAtom& b = hop.atoms[i];
    if (!a.ok || !b.ok) {
      rep.all_ok = false;
      continue;
    }
    for (std::size_t c = 0; c < a.state.cells.size(); ++c) {
      const ConservedState& x = a.state.cells[c];
      const ConservedState& y = b.state.cells[c];
      rep.max_discrepancy = std::max({rep.max_discrepancy, std::abs(x.rho - y.rho),
                                      std::abs(x.mom[0] - y.mom[0]),
                                      std::abs(x.mom[1] - y.mom[1]), std::abs(x.S - y.S)});
    }
  }
  return rep;
}

struct ExpectationRecord {
  double t = 0.0;
  std::string observable_id;
  double value = 0.0;
};

/// E[defect] at each requested duration (sorted), evaluated on left-limit
/// states through the defect observable.
inline std::vector<ExpectationRecord> defect_expectation_series(
    const DiscreteMeasure& sigma, const std::vector<double>& times, const StatPipeline& pipe,
    const ThermoParams& tp, PushforwardCache* cache = nullptr) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0))
      throw std::invalid_argument("defect_expectation_series: negative time");
    if (i > 0 && times[i] <= times[i - 1])
      throw std::invalid_argument("defect_expectation_series: times must be increasing");
  }
  validate_pipeline(pipe);
  const Observable obs = defect_observable(tp);
  std::vector<ExpectationRecord> out;
  for (double t : times) {
    const DiscreteMeasure m = pushforward(sigma, t, pipe, tp, cache);
    out.push_back({t, obs.id, expectation(obs, m, tp)});
  }
  return out;
}

/// Parametric initial families for ensembles.
struct SamplerSpec {
  std::string family = "smooth-perturbation";  // or "uniform"
  double amplitude = 0.05;
  int modes = 4;
  double rho_bar = 1.0;
  double theta_bar = 1.0;
};

namespace detail {

inline std::uint64_t atom_seed(std::uint64_t seed, int index, int attempt) {
  std::uint64_t h = fnv1a64("sample");
  h = hash_combine(h, seed);
  h = hash_combine(h, static_cast<std::uint64_t>(index));
  h = hash_combine(h, static_cast<std::uint64_t>(attempt));
  return h;
}

inline InitialData draw_atom(const SamplerSpec& spec, const Mesh& mesh, double gamma,
                             std::uint64_t seed, int index, int attempt) {
  if (spec.family == "uniform") {
    UniformSetup u;
    u.rho = spec.rho_bar;
    u.theta = spec.theta_bar;
    return make_uniform(mesh, gamma, u);
  }
  if (spec.family != "smooth-perturbation")
    throw std::invalid_argument("sampler: unknown family '" + spec.family + "'");
  SmoothSetup s;
  s.amplitude = spec.amplitude;
  s.modes = spec.modes;
  s.rho_bar = spec.rho_bar;
  s.theta_bar = spec.theta_bar;
  s.seed = atom_seed(seed, index, attempt);
  return realize_profile(mesh, smooth_profile(mesh, s), gamma) /* may be !ok */;
}

}  // namespace detail

/// Continuum budget suggestion for a sampled family: the max continuum
/// energy, min entropy floor and min mass over the first-attempt draws.
/// Deterministic in (spec, n, seed) and independent of later validation.
/// The mass floor carries rounding headroom: realized fields sum cell-mean
/// densities, which sit within quadrature rounding of the continuum mass.
struct BudgetSuggestion {
  double e_ref = 0.0;    // max continuum energy over atoms
  double s_floor = 0.0;  // min pointwise specific entropy
  double mass_min = 0.0;
};

inline BudgetSuggestion suggest_budget(const SamplerSpec& spec, const Mesh& mesh, double gamma,
                                       int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("suggest_budget: n must be >= 1");
  BudgetSuggestion b;
  b.s_floor = std::numeric_limits<double>::infinity();
  b.mass_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const InitialData d = detail::draw_atom(spec, mesh, gamma, seed, i, 0);
    if (!d.ok) continue;  // rejected draws carry no budget information
    b.e_ref = std::max(b.e_ref, d.e_ref);
    b.s_floor = std::min(b.s_floor, d.s_floor);
    b.mass_min = std::min(b.mass_min, d.mass);
  }
  if (!(b.e_ref > 0.0)) throw std::runtime_error("suggest_budget: no positive draw succeeded");
  b.mass_min *= 1.0 - 1e-9;
  return b;
}

/// n equal-weight atoms drawn deterministically from the seed; every atom
/// is validated against the phase-space constraints and rejected draws are
/// resampled with a fresh attempt index (at most 100 n attempts in total).
inline DiscreteMeasure sample_initial(const SamplerSpec& spec, const Mesh& mesh, int n,
                                      std::uint64_t seed, const ThermoParams& tp) {
  if (n < 1) throw std::invalid_argument("sample_initial: n must be >= 1");
  DiscreteMeasure out;
  out.seed = seed;
  out.sampler = spec.family;
  const double w = 1.0 / n;
  long attempts_left = 100L * n;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempts_left > 0; ++attempt) {
      --attempts_left;
      const InitialData d = detail::draw_atom(spec, mesh, tp.gamma, seed, i, attempt);
      if (!d.ok) continue;
      try {
        validate_field(d.field, tp);
      } catch (const std::exception&) {
        continue;
      }
      const ExtendedValue e = totals(d.field, tp).energy;
      if (e.is_infinite() || e.value() > tp.e_ref * (1.0 + 1e-12)) continue;
      out.atoms.push_back({w, d.field, true});
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error("sample_initial: sampler incompatible with the phase-space set");
  }
  return out;
}

}  // namespace eulab
