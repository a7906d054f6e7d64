#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "eulab/config.hpp"
#include "eulab/diagnostics.hpp"
#include "eulab/initial.hpp"
#include "eulab/io.hpp"
#include "eulab/selection.hpp"
#include "eulab/solver.hpp"
#include "eulab/statistical.hpp"
#include "eulab/thermo.hpp"

namespace eulab {

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  return os;
}

inline std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%03zu.dat", k);
  return buf;
}

inline InitialData checked_initial(const RunConfig& cfg) {
  InitialData init;
  try {
    init = build_initial(cfg);
  } catch (const std::domain_error& e) {
    // Unrealizable profile parameters are configuration problems.
    throw ConfigError(std::string("initial: ") + e.what());
  }
  if (!init.ok) throw ConfigError("initial: profile is not strictly positive on this mesh");
  return init;
}

inline std::vector<std::pair<std::string, SchemeConfig>> scheme_grid(const RunConfig& cfg) {
  std::vector<std::pair<std::string, SchemeConfig>> grid;
  for (const SchemeEntry& e : cfg.schemes) grid.emplace_back(e.id, e.scheme);
  return grid;
}

}  // namespace detail

/// Evolve the configured initial state with the first scheme (reinjecting
/// the defect when bump_dt > 0) and write snapshots, the totals series and
/// the manifest.
inline int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, int workers,
                        bool verbose) {
  (void)workers;
  const InitialData init = detail::checked_initial(cfg);
  const ThermoParams tp = make_thermo(cfg, init);
  RunOptions opts;
  opts.snapshot_times = cfg.snapshot_times;
  Trajectory traj;
  if (cfg.bump_dt > 0.0) {
    PipelineConfig pc;
    pc.scheme = cfg.schemes.front().scheme;
    pc.bump_dt = cfg.bump_dt;
    pc.bump_threshold_rel = cfg.bump_threshold_rel;
    traj = evolve_pipeline(init.field, cfg.t_end, pc, tp, opts);
  } else {
    traj = run(init.field, cfg.schemes.front().scheme, tp, cfg.t_end, opts);
  }
  if (!traj.valid) throw NumericError("simulate: " + traj.failure, -1);

  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const std::string name = detail::snapshot_name(k);
    auto os = detail::open_output(out_dir, name);
    write_snapshot(os, traj.snapshots[k], tp, cfg.config_hash);
    outputs.push_back(name);
  }
  {
    auto os = detail::open_output(out_dir, "series.dat");
    write_series(os, traj.series, cfg.config_hash, cfg.defect_trace_constant);
    outputs.push_back("series.dat");
  }
  {
    auto os = detail::open_output(out_dir, "manifest.json");
    write_manifest(os, cfg, "simulate", outputs);
  }
  if (verbose) {
    const SeriesRecord& r = traj.series.back();
    std::cout << "simulate: t=" << r.t << " mass=" << r.mass << " energy=" << r.energy
              << " defect=" << r.defect << "\n";
  }
  return 0;
}

/// Run the whole scheme grid from the shared initial state to the selection
/// horizon, pick the admissible discounted-cost argmin and write the score
/// table plus the chosen candidate's series.
inline int cmd_select(const RunConfig& cfg, const std::string& out_dir, int workers,
                      bool verbose) {
  const InitialData init = detail::checked_initial(cfg);
  const ThermoParams tp = make_thermo(cfg, init);
  const CandidateSet set =
      run_candidates(init.field, detail::scheme_grid(cfg), tp, cfg.selection.horizon, workers);
  const EquilibriumState eq =
      equilibrium(totals(init.field, tp).mass, tp.e_ref, init.field.mesh.domain_volume(), tp);
  const SelectionResult sel =
      select_admissible(set, eq, tp, cfg.selection.horizon, cfg.selection.lambda,
                        cfg.selection.tie_rel);

  std::vector<std::string> outputs;
  {
    auto os = detail::open_output(out_dir, "selection.dat");
    write_selection(os, sel, set, cfg.config_hash);
    outputs.push_back("selection.dat");
  }
  {
    auto os = detail::open_output(out_dir, "series.dat");
    write_series(os, set.items[static_cast<std::size_t>(sel.chosen_index)].traj.series,
                 cfg.config_hash, cfg.defect_trace_constant);
    outputs.push_back("series.dat");
  }
  {
    auto os = detail::open_output(out_dir, "manifest.json");
    write_manifest(os, cfg, "select", outputs);
  }
  if (verbose) {
    const CandidateScore& s = sel.scores[static_cast<std::size_t>(sel.chosen_index)];
    std::cout << "select: chosen=" << s.id << " cost=" << s.cost << " tail=" << s.tail
              << (sel.tie ? " (tie)" : "") << "\n";
  }
  return 0;
}

/// Sample the configured ensemble, push it through the pipeline and write
/// the expected-defect series. Auto thermo fields resolve from the sampled
/// family's continuum budgets.
inline int cmd_ensemble(const RunConfig& cfg, const std::string& out_dir, int workers,
                        bool verbose) {
  const Mesh mesh = make_mesh_from(cfg.mesh);
  const SamplerSpec& spec = cfg.ensemble.sampler;
  ThermoParams tp;
  tp.gamma = cfg.thermo.gamma;
  tp.c_v = 1.0 / (cfg.thermo.gamma - 1.0);
  tp.rho_vac = cfg.thermo.rho_vac;
  if (cfg.thermo.e_ref && cfg.thermo.s_floor) {
    tp.e_ref = *cfg.thermo.e_ref;
    tp.s_floor = *cfg.thermo.s_floor;
    tp.m_min = cfg.thermo.m_min;
  } else {
    const BudgetSuggestion b =
        suggest_budget(spec, mesh, cfg.thermo.gamma, cfg.ensemble.n, cfg.ensemble.seed);
    tp.e_ref = cfg.thermo.e_ref ? *cfg.thermo.e_ref : b.e_ref;
    tp.s_floor = cfg.thermo.s_floor ? *cfg.thermo.s_floor : b.s_floor;
    tp.m_min = std::min(cfg.thermo.m_min, b.mass_min);
  }
  const DiscreteMeasure sigma = sample_initial(spec, mesh, cfg.ensemble.n, cfg.ensemble.seed, tp);
  validate_measure(sigma, tp);

  StatPipeline pipe;
  pipe.candidates = detail::scheme_grid(cfg);
  pipe.lambda = cfg.selection.lambda;
  pipe.horizon = cfg.selection.horizon;
  pipe.bump_dt = cfg.bump_dt;
  pipe.bump_threshold_rel = cfg.bump_threshold_rel;
  pipe.workers = workers;
  validate_pipeline(pipe);

  std::vector<double> times = cfg.ensemble.times;
  if (times.empty())
    times = {0.0, 0.25 * cfg.t_end, 0.5 * cfg.t_end, 0.75 * cfg.t_end, cfg.t_end};
  PushforwardCache cache;
  const std::vector<ExpectationRecord> series =
      defect_expectation_series(sigma, times, pipe, tp, &cache);

  std::vector<std::string> outputs;
  {
    auto os = detail::open_output(out_dir, "expectation.dat");
    write_expectation_series(os, series, cfg.config_hash, cfg.defect_trace_constant);
    outputs.push_back("expectation.dat");
  }
  {
    auto os = detail::open_output(out_dir, "manifest.json");
    write_manifest(os, cfg, "ensemble", outputs);
  }
  if (verbose && !series.empty())
    std::cout << "ensemble: atoms=" << sigma.atoms.size() << " E[defect](t0)="
              << series.front().value << " E[defect](t_end)=" << series.back().value << "\n";
  return 0;
}

/// Evolve with per-step snapshots and audit the weak-form residuals of the
/// fixed test-function library.
inline int cmd_diagnose(const RunConfig& cfg, const std::string& out_dir, int workers,
                        bool verbose) {
  (void)workers;
  const InitialData init = detail::checked_initial(cfg);
  const ThermoParams tp = make_thermo(cfg, init);
  RunOptions opts;
  opts.snapshot_every_step = true;
  const Trajectory traj = run(init.field, cfg.schemes.front().scheme, tp, cfg.t_end, opts);
  if (!traj.valid) throw NumericError("diagnose: " + traj.failure, -1);
  const double t_supp = cfg.t_supp > 0.0 ? cfg.t_supp : cfg.t_end;
  const ResidualReport rep = residual_report(traj, standard_tests(init.field.mesh, t_supp), tp);

  std::vector<std::string> outputs;
  {
    auto os = detail::open_output(out_dir, "residuals.dat");
    write_residuals(os, rep, cfg.config_hash);
    outputs.push_back("residuals.dat");
  }
  {
    auto os = detail::open_output(out_dir, "series.dat");
    write_series(os, traj.series, cfg.config_hash, cfg.defect_trace_constant);
    outputs.push_back("series.dat");
  }
  {
    auto os = detail::open_output(out_dir, "manifest.json");
    write_manifest(os, cfg, "diagnose", outputs);
  }
  if (verbose) {
    double worst = 0.0;
    for (const ResidualRow& r : rep.rows) worst = std::max(worst, std::abs(r.value));
    std::cout << "diagnose: tests=" << rep.rows.size() << " max|residual|=" << worst << "\n";
  }
  return 0;
}

}  // namespace eulab
