// Acceptance gates: one self-contained check per shipped guarantee, each
// printed as a single PASS/FAIL line with the measured numbers and its
// tolerances pinned right here. Gates 1-7 are hard (nonzero exit on any
// failure); gate 8 reports a trend and only warns, since it depends on a
// fixed-resolution proxy for an asymptotic statement.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "eulab/diagnostics.hpp"
#include "eulab/initial.hpp"
#include "eulab/selection.hpp"
#include "eulab/solver.hpp"
#include "eulab/statistical.hpp"
#include "eulab/thermo.hpp"
#include "support/exact_riemann.hpp"
#include "support/helpers.hpp"

namespace {

using namespace eulab;

int g_hard_failures = 0;

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void report(int id, bool pass, bool hard, const std::string& name, const std::string& detail) {
  if (hard && !pass) ++g_hard_failures;
  std::printf("[%s] gate %d %-28s %s\n", pass ? "PASS" : (hard ? "FAIL" : "WARN"), id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return std::string(buf);
}

ThermoParams sod_thermo(const InitialData& init, double gamma = 1.4) {
  ThermoParams tp;
  tp.gamma = gamma;
  tp.c_v = 1.0 / (gamma - 1.0);
  tp.e_ref = init.e_ref;
  tp.s_floor = init.s_floor;
  tp.m_min = 0.5 * init.mass;
  return tp;
}

ConservedState random_interior_state(std::mt19937_64& rng, const ThermoParams& tp) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double rho = 0.1 + 2.9 * u01(rng);
  const std::array<double, 2> u = {4.0 * u01(rng) - 2.0, 2.0 * u01(rng) - 1.0};
  const double theta = 0.2 + 2.8 * u01(rng);
  return state_from_primitive(rho, u, theta, tp);
}

// Gate 1: the convex energy toolkit. Bregman divergences of the total
// energy are nonnegative and vanish at identical arguments; the analytic
// gradient matches central differences; the jump function G is zero at the
// origin and strictly increasing on its domain.
void gate_energy_identities() {
  const double t0 = now_s();
  const ThermoParams tp = make_thermo_params(1.4, -50.0, 1e-8, 10.0);
  std::mt19937_64 rng(20260814u);

  constexpr double kIdentityTol = 1e-10;
  double breg_min = std::numeric_limits<double>::infinity();
  double ident_max = 0.0;
  bool finite = true;
  for (int i = 0; i < 10000; ++i) {
    const ConservedState a = random_interior_state(rng, tp);
    const ConservedState b = random_interior_state(rng, tp);
    const ExtendedValue d = bregman_divergence(a, b, tp);
    if (d.is_infinite()) {
      finite = false;
      break;
    }
    breg_min = std::min(breg_min, d.value());
    ident_max = std::max(ident_max, std::abs(bregman_divergence(a, a, tp).value()));
  }

  constexpr double kGradTol = 1e-6;
  double grad_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ConservedState st = random_interior_state(rng, tp);
    const EnergyGradient g = energy_gradient(st, tp);
    const double analytic[4] = {g.d_rho, g.d_mom[0], g.d_mom[1], g.d_S};
    for (int k = 0; k < 4; ++k) {
      auto shifted = [&](double h) {
        ConservedState s = st;
        (k == 0 ? s.rho : k == 1 ? s.mom[0] : k == 2 ? s.mom[1] : s.S) += h;
        return total_energy(s, tp).value();
      };
      const double base = (k == 0 ? st.rho : k == 1 ? st.mom[0] : k == 2 ? st.mom[1] : st.S);
      const double h = 1e-6 * std::max(1.0, std::abs(base));
      const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
      grad_err = std::max(grad_err,
                          std::abs(fd - analytic[k]) / std::max(1.0, std::abs(analytic[k])));
    }
  }

  const double e0 = 2.75;
  const bool zero_exact = jump_function_G(0.0, e0) == 0.0;
  bool strict = true;
  double prev = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double y = 0.999 * e0 * static_cast<double>(i) / 999.0;
    const double gy = jump_function_G(y, e0);
    if (!(gy > prev)) strict = false;
    prev = gy;
  }

  const bool pass = finite && breg_min >= -kIdentityTol && ident_max <= kIdentityTol &&
                    grad_err < kGradTol && zero_exact && strict;
  report(1, pass, true, "energy identities",
         fmt("bregman_min=%.2e identity_max=%.2e grad_relerr=%.2e G0_exact=%d strict=%d (%.1fs)",
             breg_min, ident_max, grad_err, int(zero_exact), int(strict), now_s() - t0));
}

// Gate 2: conservation and admissibility on the 400-cell shock tube. Mass
// is conserved to rounding, total energy never rises and total entropy
// never falls between consecutive steps.
void gate_conservation() {
  const double t0 = now_s();
  const InitialData init = make_riemann(testutil::mesh1d(400), 1.4);
  const ThermoParams tp = sod_thermo(init);
  SchemeConfig cfg;
  cfg.cfl = 0.45;
  const Trajectory traj = run(init.field, cfg, tp, 0.2);

  constexpr double kMassTolRel = 1e-12;
  constexpr double kEntropyTol = 1e-10;
  const double energy_tol = 1e-10 * init.e_ref;

  double mass_drift = 0.0, energy_rise = 0.0, entropy_drop = 0.0;
  const double mass0 = traj.series.front().mass;
  for (std::size_t i = 0; i < traj.series.size(); ++i) {
    mass_drift = std::max(mass_drift, std::abs(traj.series[i].mass - mass0));
    if (i > 0) {
      energy_rise = std::max(energy_rise, traj.series[i].energy - traj.series[i - 1].energy);
      entropy_drop = std::max(entropy_drop, traj.series[i - 1].entropy - traj.series[i].entropy);
    }
  }
  const bool pass = traj.valid && mass_drift <= kMassTolRel * mass0 &&
                    energy_rise <= energy_tol && entropy_drop <= kEntropyTol;
  report(2, pass, true, "conservation/admissibility",
         fmt("mass_drift=%.2e energy_rise=%.2e entropy_drop=%.2e steps=%zu (%.1fs)", mass_drift,
             energy_rise, entropy_drop, traj.series.size() - 1, now_s() - t0));
}

// Gate 3: convergence to the exact shock-tube solution, run with the
// second-order reconstruction at cfl 0.45. The first-order scheme converges
// too, but contact smearing caps its observed L1 order near 0.62 at these
// resolutions, below this gate's bar.
void gate_convergence() {
  const double t0 = now_s();
  constexpr double kL1Bound = 0.02;
  constexpr double kOrderBound = 0.7;
  const double t_end = 0.2;
  const oracle::ExactRiemann ex({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 1.4);

  std::map<int, double> err;
  bool valid = true;
  for (int n : {200, 400, 800}) {
    const Mesh mesh = testutil::mesh1d(n);
    const InitialData init = make_riemann(mesh, 1.4);
    const ThermoParams tp = sod_thermo(init);
    SchemeConfig cfg;
    cfg.order = 2;
    cfg.cfl = 0.45;
    const Trajectory traj = run(init.field, cfg, tp, t_end);
    valid = valid && traj.valid;
    if (!traj.valid) break;
    err[n] = testutil::l1_rho(traj.final_state(),
                              testutil::riemann_exact_field(mesh, ex, 0.5, t_end, tp));
  }
  const double order = valid ? std::log(err[200] / err[800]) / std::log(4.0) : 0.0;
  const bool pass = valid && err[400] <= kL1Bound && order >= kOrderBound;
  report(3, pass, true, "shock-tube convergence",
         fmt("L1(400)=%.5f<=%.2f order(200->800)=%.3f>=%.1f (%.1fs)", err[400], kL1Bound, order,
             kOrderBound, now_s() - t0));
}

// Gate 4: exactness of the entropy bump on three constructed positive-defect
// fields: a resting uniform gas, a smooth moving profile and a half-vacuum
// field. The bump must close the defect, its cost jump must match the
// closed form d - E0 log(1 + d/I), and whenever I <= E0 - d it must not
// exceed -G(d).
void gate_bump_exactness() {
  const double t0 = now_s();
  constexpr double kTol = 1e-10;

  struct Case {
    std::string name;
    FieldState field;
    double pad = 0.0;  // budget above the field's own total energy
  };
  std::vector<Case> cases;

  {
    Case c;
    c.name = "uniform";
    c.field = make_field(testutil::mesh1d(16));
    for (ConservedState& st : c.field.cells) st = ConservedState{1.0, {0.0, 0.0}, 0.0};
    c.pad = 0.25;
    cases.push_back(c);
  }
  {
    Case c;
    c.name = "smooth";
    c.field = make_field(testutil::mesh1d(32));
    ThermoParams tmp = make_thermo_params(1.4, -10.0, 1e-8, 1.0);
    for (int i = 0; i < 32; ++i) {
      const double x = (i + 0.5) / 32.0;
      const double rho = 1.0 + 0.3 * std::sin(2.0 * M_PI * x);
      const double theta = 1.0 + 0.2 * std::sin(4.0 * M_PI * x + 1.0);
      c.field.cells[static_cast<std::size_t>(i)] =
          state_from_primitive(rho, {0.2 * std::cos(2.0 * M_PI * x), 0.0}, theta, tmp);
    }
    c.pad = 0.15;
    cases.push_back(c);
  }
  {
    Case c;
    c.name = "half-vacuum";
    c.field = make_field(testutil::mesh1d(24));
    ThermoParams tmp = make_thermo_params(1.4, -10.0, 1e-8, 1.0);
    for (int i = 8; i < 24; ++i)
      c.field.cells[static_cast<std::size_t>(i)] =
          state_from_primitive(0.8, {0.1, 0.0}, 0.9, tmp);
    c.pad = 0.05;
    cases.push_back(c);
  }

  bool pass = true;
  double worst_defect = 0.0, worst_form = 0.0, worst_bound = -1e300;
  for (const Case& c : cases) {
    ThermoParams tp = make_thermo_params(1.4, -10.0, 0.05, 1.0);
    const Totals tot = totals(c.field, tp);
    tp.e_ref = tot.energy.value() + c.pad;

    const EnergyDefect before = energy_defect(c.field, tp.e_ref, tp);
    const BumpResult res = entropy_bump(c.field, tp);
    const EnergyDefect after = energy_defect(res.field, tp.e_ref, tp);

    const double closed =
        res.defect - tp.e_ref * std::log1p(res.defect / res.internal_energy);
    worst_defect = std::max(worst_defect, std::abs(after.raw));
    worst_form = std::max(worst_form, std::abs(res.cost_jump - closed));
    pass = pass && before.value > 0.0 && std::abs(after.raw) <= kTol &&
           std::abs(res.cost_jump - closed) <= kTol;
    if (res.internal_energy <= tp.e_ref - res.defect) {
      const double slack = res.cost_jump + jump_function_G(res.defect, tp.e_ref);
      worst_bound = std::max(worst_bound, slack);
      pass = pass && slack <= kTol;
    }
  }
  report(4, pass, true, "entropy bump exactness",
         fmt("post_defect=%.2e form_err=%.2e bound_slack=%.2e on %zu fields (%.1fs)",
             worst_defect, worst_form, worst_bound, cases.size(), now_s() - t0));
}

// Gate 5: the selection rule. The argmin agrees with an independent scan of
// the tie-band contract on random tables, exact ties go to the lowest index
// with the flag raised, relabeling candidates relabels the choice, and the
// discounted cost quadrature reproduces closed forms.
void gate_selection() {
  const double t0 = now_s();
  std::mt19937_64 rng(424242u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  constexpr double kTieRel = 1e-12;

  bool argmin_ok = true;
  for (int trial = 0; trial < 1000 && argmin_ok; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(rng() % 7);
    std::vector<double> costs(k);
    std::vector<char> adm(k);
    for (std::size_t i = 0; i < k; ++i) {
      costs[i] = u01(rng);
      adm[i] = u01(rng) < 0.7 ? 1 : 0;
    }
    adm[rng() % k] = 1;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
      if (adm[i]) best = std::min(best, costs[i]);
    const double band = best + kTieRel * std::abs(best);
    int expected = -1;
    for (std::size_t i = 0; i < k; ++i)
      if (adm[i] && costs[i] <= band) {
        expected = static_cast<int>(i);
        break;
      }
    argmin_ok = choose_argmin(costs, adm, kTieRel) == expected;
  }

  bool tie = false;
  const bool tie_ok =
      choose_argmin({0.9, 0.4, 0.4, 0.7}, {1, 1, 1, 1}, kTieRel, &tie) == 1 && tie;

  bool perm_ok = true;
  {
    const std::vector<double> costs = {0.61, 0.13, 0.77, 0.29, 0.45};
    const std::vector<char> adm = {1, 1, 1, 1, 1};
    const int base = choose_argmin(costs, adm, kTieRel);
    std::vector<std::size_t> perm = {4, 2, 0, 3, 1};
    std::vector<double> pc(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) pc[i] = costs[perm[i]];
    const int moved = choose_argmin(pc, adm, kTieRel);
    perm_ok = base >= 0 && moved >= 0 &&
              perm[static_cast<std::size_t>(moved)] == static_cast<std::size_t>(base);
  }

  constexpr double kQuadTol = 1e-6;
  auto series_of = [](const std::vector<double>& ts, auto f) {
    std::vector<SeriesRecord> s(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      s[i].t = ts[i];
      s[i].cost = f(ts[i]);
    }
    return s;
  };
  const double lam = 0.7, T = 4.0, c = 1.3, a = 1.3;
  const double const_quad =
      weighted_cost_series(series_of({0.0, 1.7, 2.9, T}, [&](double) { return c; }), lam, T)
          .integral;
  const double const_exact = c * (1.0 - std::exp(-lam * T)) / lam;
  std::vector<double> fine(4001);
  for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = T * static_cast<double>(i) / 4000.0;
  const double exp_quad =
      weighted_cost_series(series_of(fine, [&](double t) { return std::exp(-a * t); }), lam, T)
          .integral;
  const double exp_exact = (1.0 - std::exp(-(lam + a) * T)) / (lam + a);
  const WeightedCost flat =
      weighted_cost_series(series_of({0.0, T}, [&](double) { return c; }), 0.0, T);
  const bool quad_ok = std::abs(const_quad - const_exact) <= kQuadTol &&
                       std::abs(exp_quad - exp_exact) <= kQuadTol &&
                       std::abs(flat.integral - c * T) <= kQuadTol && flat.tail == 0.0;

  const bool pass = argmin_ok && tie_ok && perm_ok && quad_ok;
  report(5, pass, true, "selection rule",
         fmt("argmin_ok=%d tie_ok=%d perm_ok=%d const_err=%.1e exp_err=%.1e (%.1fs)",
             int(argmin_ok), int(tie_ok), int(perm_ok), std::abs(const_quad - const_exact),
             std::abs(exp_quad - exp_exact), now_s() - t0));
}

// Gate 6: the push-forward acts as a Markov map on atomic measures. Zero
// duration is the bitwise identity, Dirac and mixture atoms move exactly as
// the underlying deterministic map with weights untouched, and composing
// 0.1 after 0.1 matches the single 0.2 move on the aligned bump grid.
void gate_pushforward() {
  const double t0 = now_s();
  SamplerSpec spec;
  spec.family = "smooth-perturbation";
  const Mesh mesh = testutil::mesh1d(64);
  const double gamma = 1.4;
  const BudgetSuggestion budget = suggest_budget(spec, mesh, gamma, 5, 7);
  ThermoParams tp;
  tp.gamma = gamma;
  tp.c_v = 1.0 / (gamma - 1.0);
  tp.e_ref = budget.e_ref;
  tp.s_floor = budget.s_floor;
  tp.m_min = budget.mass_min;
  const DiscreteMeasure sigma = sample_initial(spec, mesh, 5, 7, tp);

  StatPipeline pipe;
  pipe.bump_dt = 0.05;

  const DiscreteMeasure frozen = pushforward(sigma, 0.0, pipe, tp);
  bool identity_ok = frozen.atoms.size() == sigma.atoms.size();
  for (std::size_t i = 0; identity_ok && i < sigma.atoms.size(); ++i)
    identity_ok = frozen.atoms[i].weight == sigma.atoms[i].weight &&
                  testutil::bitwise_equal(frozen.atoms[i].state, sigma.atoms[i].state);

  PipelineConfig pc;
  pc.scheme = pipe.candidates.front().second;
  pc.bump_dt = pipe.bump_dt;
  pc.bump_threshold_rel = pipe.bump_threshold_rel;
  auto moved = [&](const FieldState& f, double t) {
    return evolve_pipeline(f, t, pc, tp).state_left(t);
  };

  DiscreteMeasure dirac;
  dirac.atoms.push_back({1.0, sigma.atoms[0].state, true});
  const DiscreteMeasure dpush = pushforward(dirac, 0.1, pipe, tp);
  bool dirac_ok = dpush.atoms.size() == 1 && dpush.atoms[0].weight == 1.0 &&
                  testutil::bitwise_equal(dpush.atoms[0].state, moved(sigma.atoms[0].state, 0.1));

  DiscreteMeasure mix;
  const double w[3] = {0.5, 0.3, 0.2};
  for (int i = 0; i < 3; ++i) mix.atoms.push_back({w[i], sigma.atoms[static_cast<std::size_t>(i)].state, true});
  const DiscreteMeasure mpush = pushforward(mix, 0.1, pipe, tp);
  bool mix_ok = mpush.atoms.size() == 3;
  for (std::size_t i = 0; mix_ok && i < 3; ++i)
    mix_ok = mpush.atoms[i].weight == w[i] &&
             testutil::bitwise_equal(mpush.atoms[i].state, moved(mix.atoms[i].state, 0.1));

  constexpr double kSemigroupTol = 1e-12;
  PushforwardCache cache;
  const SemigroupReport rep = check_semigroup(sigma, 0.1, 0.1, pipe, tp, &cache);
  const bool semi_ok = rep.all_ok && rep.max_discrepancy <= kSemigroupTol;

  const bool pass = identity_ok && dirac_ok && mix_ok && semi_ok;
  report(6, pass, true, "push-forward semigroup",
         fmt("identity=%d dirac=%d mixture=%d discrepancy=%.2e atoms=%d (%.1fs)",
             int(identity_ok), int(dirac_ok), int(mix_ok), rep.max_discrepancy, rep.atoms,
             now_s() - t0));
}

// Gate 7: weak residual refinement on the shock tube at {100, 200, 400}
// cells. Every residual must keep sign discipline and shrink by <= 0.7 per
// halving. The continuity and momentum residuals refine at first order; the
// entropy residual converges to the exact solution's positive shock
// production instead of zero, so its ratio flattens near 0.72 and this gate
// records that honestly rather than relaxing the bar.
void gate_residual_refinement() {
  const double t0 = now_s();
  constexpr double kRatioBound = 0.7;
  constexpr double kSignTol = -1e-6;
  const double t_end = 0.2;

  std::map<std::string, std::vector<double>> peak;
  double entropy_min = std::numeric_limits<double>::infinity();
  bool valid = true;
  for (int n : {100, 200, 400}) {
    const Mesh mesh = testutil::mesh1d(n);
    const InitialData init = make_riemann(mesh, 1.4);
    const ThermoParams tp = sod_thermo(init);
    SchemeConfig cfg;
    cfg.cfl = 0.45;
    RunOptions opts;
    opts.snapshot_every_step = true;
    const Trajectory traj = run(init.field, cfg, tp, t_end, opts);
    valid = valid && traj.valid;
    if (!valid) break;

    const ResidualReport rep = residual_report(traj, standard_tests(mesh, t_end), tp);
    std::map<std::string, double> agg;
    for (const ResidualRow& r : rep.rows) {
      agg[r.quantity] = std::max(agg[r.quantity], std::abs(r.value));
      if (r.quantity == "entropy") entropy_min = std::min(entropy_min, r.value);
    }
    for (const auto& [q, v] : agg) peak[q].push_back(v);
  }

  bool ratios_ok = valid;
  std::string detail;
  for (const char* q : {"continuity", "momentum", "entropy"}) {
    const std::vector<double>& v = peak[q];
    if (v.size() != 3) {
      ratios_ok = false;
      continue;
    }
    const double r1 = v[1] / v[0], r2 = v[2] / v[1];
    ratios_ok = ratios_ok && r1 <= kRatioBound && r2 <= kRatioBound;
    detail += fmt("%s=(%.3f,%.3f) ", q, r1, r2);
  }
  const bool sign_ok = entropy_min >= kSignTol;
  const bool pass = ratios_ok && sign_ok;
  report(7, pass, true, "weak residual refinement",
         detail + fmt("entropy_min=%.2e (%.1fs)", entropy_min, now_s() - t0));
  if (!ratios_ok)
    std::printf("       note: the entropy residual measures entropy production, which tends to\n"
                "       the exact solution's shock production (about 3e-3 on this family), so\n"
                "       its refinement ratio levels off near 0.72 instead of reaching 0.5.\n");
}

// Gate 8 (soft): expected defect of a 20-atom smooth ensemble at t=1 should
// decrease across resolutions. Energy conservation pins each atom's defect
// to its initial cell-averaging gap, which shrinks at second order, so the
// trend reflects discretization quality rather than long-time dynamics.
void gate_defect_trend() {
  const double t0 = now_s();
  SamplerSpec spec;
  spec.family = "smooth-perturbation";
  const double gamma = 1.4;
  const BudgetSuggestion budget = suggest_budget(spec, testutil::mesh1d(100), gamma, 20, 2026);
  ThermoParams tp;
  tp.gamma = gamma;
  tp.c_v = 1.0 / (gamma - 1.0);
  tp.e_ref = budget.e_ref;
  tp.s_floor = budget.s_floor;
  tp.m_min = budget.mass_min;

  StatPipeline pipe;
  pipe.workers = 4;

  std::vector<double> values;
  std::string series_txt;
  for (int n : {100, 200, 400}) {
    const DiscreteMeasure sigma = sample_initial(spec, testutil::mesh1d(n), 20, 2026, tp);
    PushforwardCache cache;
    const std::vector<ExpectationRecord> series =
        defect_expectation_series(sigma, {0.0, 1.0}, pipe, tp, &cache);
    values.push_back(series[1].value);
    series_txt += fmt("E[defect|%d]=%.6e ", n, series[1].value);
  }
  const bool pass = values[0] > values[1] && values[1] > values[2];
  report(8, pass, false, "ensemble defect trend", series_txt + fmt("(%.1fs)", now_s() - t0));
}

}  // namespace

int main() {
  std::printf("eulab acceptance gates\n");
  gate_energy_identities();
  gate_conservation();
  gate_convergence();
  gate_bump_exactness();
  gate_selection();
  gate_pushforward();
  gate_residual_refinement();
  gate_defect_trend();
  if (g_hard_failures == 0) {
    std::printf("all hard gates passed\n");
    return 0;
  }
  std::printf("%d hard gate(s) failed\n", g_hard_failures);
  return 1;
}
