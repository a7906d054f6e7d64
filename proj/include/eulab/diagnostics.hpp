#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/solver.hpp"
#include "eulab/thermo.hpp"

namespace eulab {

/// One member of the fixed, versioned test-function family: a separable
/// phi(t, x) = psi(t) g(x) with the C1 cutoff psi(t) = cos^2(pi t / (2 T))
/// on [0, T_supp) and zero beyond.
///
/// Scalar profiles:
///   Trig: g = offset + amplitude * prod_a cos(mode_a pi x_a / L_a)
///   Poly: g = offset + amplitude * prod_a (4 xi_a (1-xi_a))^mode_a, xi = x/L
/// Vector profiles (component a active when mode_a > 0):
///   Trig: g_a = amplitude * sin(mode_a pi x_a / L_a) * cos(mode_b pi x_b / L_b)
///   Poly: g_a = amplitude * (4 xi_a (1-xi_a))^mode_a
/// Both vector forms vanish on the walls normal to their component, so
/// g . n = 0 holds exactly.
struct TestFunction {
  enum class Kind { Poly, Trig };
  Kind kind = Kind::Trig;
  bool is_vector = false;
  double t_supp = 1.0;
  std::array<int, 2> mode = {1, 0};
  double offset = 0.0;
  double amplitude = 1.0;
  std::string id;
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

inline double bump_pow(double xi, int n) {
  if (n <= 0) return 1.0;
  double b = 4.0 * xi * (1.0 - xi);
  double r = b;
  for (int i = 1; i < n; ++i) r *= b;
  return r;
}

inline double bump_pow_deriv(double xi, int n, double L) {
  if (n <= 0) return 0.0;
  const double b = 4.0 * xi * (1.0 - xi);
  double p = 1.0;
  for (int i = 1; i < n; ++i) p *= b;
  return n * p * (4.0 - 8.0 * xi) / L;
}

}  // namespace detail

inline double test_psi(const TestFunction& f, double t) {
  if (t < 0.0 || t >= f.t_supp) return 0.0;
  const double c = std::cos(detail::kPi * t / (2.0 * f.t_supp));
  return c * c;
}

inline double test_dpsi(const TestFunction& f, double t) {
  if (t < 0.0 || t >= f.t_supp) return 0.0;
  return -(detail::kPi / (2.0 * f.t_supp)) * std::sin(detail::kPi * t / f.t_supp);
}

/// Antiderivative of psi, continuous across the support boundary.
inline double test_Psi(const TestFunction& f, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= f.t_supp) return 0.5 * f.t_supp;
  return 0.5 * t + (f.t_supp / (2.0 * detail::kPi)) * std::sin(detail::kPi * t / f.t_supp);
}

inline double test_scalar(const TestFunction& f, const Mesh& mesh, double x, double y) {
  if (f.is_vector) throw std::invalid_argument("test_scalar: vector test function");
  double prod = 1.0;
  const std::array<double, 2> pos = {x, y};
  for (int a = 0; a < mesh.dim; ++a) {
    if (f.mode[a] == 0) continue;
    const double xi = pos[static_cast<std::size_t>(a)] / mesh.extent[a];
    prod *= f.kind == TestFunction::Kind::Trig ? std::cos(f.mode[a] * detail::kPi * xi)
                                               : detail::bump_pow(xi, f.mode[a]);
  }
  return f.offset + f.amplitude * prod;
}

inline std::array<double, 2> test_scalar_grad(const TestFunction& f, const Mesh& mesh, double x,
                                              double y) {
  std::array<double, 2> grad = {0.0, 0.0};
  const std::array<double, 2> pos = {x, y};
  std::array<double, 2> factor = {1.0, 1.0};
  std::array<double, 2> deriv = {0.0, 0.0};
  for (int a = 0; a < mesh.dim; ++a) {
    const double L = mesh.extent[a];
    const double xi = pos[static_cast<std::size_t>(a)] / L;
    if (f.mode[a] == 0) continue;
    if (f.kind == TestFunction::Kind::Trig) {
      const double w = f.mode[a] * detail::kPi;
      factor[static_cast<std::size_t>(a)] = std::cos(w * xi);
      deriv[static_cast<std::size_t>(a)] = -(w / L) * std::sin(w * xi);
    } else {
      factor[static_cast<std::size_t>(a)] = detail::bump_pow(xi, f.mode[a]);
      deriv[static_cast<std::size_t>(a)] = detail::bump_pow_deriv(xi, f.mode[a], L);
    }
  }
  for (int a = 0; a < mesh.dim; ++a)
    grad[static_cast<std::size_t>(a)] =
        f.amplitude * deriv[static_cast<std::size_t>(a)] * factor[static_cast<std::size_t>(1 - a)];
  if (mesh.dim == 1) grad[1] = 0.0;
  return grad;
}

inline std::array<double, 2> test_vector(const TestFunction& f, const Mesh& mesh, double x,
                                         double y) {
  if (!f.is_vector) throw std::invalid_argument("test_vector: scalar test function");
  std::array<double, 2> g = {0.0, 0.0};
  const std::array<double, 2> pos = {x, y};
  for (int a = 0; a < mesh.dim; ++a) {
    if (f.mode[a] == 0) continue;
    const double xi = pos[static_cast<std::size_t>(a)] / mesh.extent[a];
    double val;
    if (f.kind == TestFunction::Kind::Trig) {
      val = std::sin(f.mode[a] * detail::kPi * xi);
      if (mesh.dim == 2) {
        const int b = 1 - a;
        if (f.mode[b] != 0) {
          const double xib = pos[static_cast<std::size_t>(b)] / mesh.extent[b];
          val *= std::cos(f.mode[b] * detail::kPi * xib);
        }
      }
    } else {
      val = detail::bump_pow(xi, f.mode[a]);
    }
    g[static_cast<std::size_t>(a)] = f.amplitude * val;
  }
  return g;
}

/// Row-major gradient [d0 g0, d1 g0, d0 g1, d1 g1].
inline std::array<double, 4> test_vector_grad(const TestFunction& f, const Mesh& mesh, double x,
                                              double y) {
  if (!f.is_vector) throw std::invalid_argument("test_vector_grad: scalar test function");
  std::array<double, 4> grad = {0.0, 0.0, 0.0, 0.0};
  const std::array<double, 2> pos = {x, y};
  for (int a = 0; a < mesh.dim; ++a) {
    if (f.mode[a] == 0) continue;
    const double La = mesh.extent[a];
    const double xia = pos[static_cast<std::size_t>(a)] / La;
    if (f.kind == TestFunction::Kind::Trig) {
      const double wa = f.mode[a] * detail::kPi;
      double trans = 1.0, dtrans = 0.0;
      if (mesh.dim == 2) {
        const int b = 1 - a;
        if (f.mode[b] != 0) {
          const double Lb = mesh.extent[b];
          const double xib = pos[static_cast<std::size_t>(b)] / Lb;
          const double wb = f.mode[b] * detail::kPi;
          trans = std::cos(wb * xib);
          dtrans = -(wb / Lb) * std::sin(wb * xib);
        }
      }
      grad[static_cast<std::size_t>(2 * a + a)] =
          f.amplitude * (wa / La) * std::cos(wa * xia) * trans;
      if (mesh.dim == 2)
        grad[static_cast<std::size_t>(2 * a + (1 - a))] =
            f.amplitude * std::sin(wa * xia) * dtrans;
    } else {
      grad[static_cast<std::size_t>(2 * a + a)] =
          f.amplitude * detail::bump_pow_deriv(xia, f.mode[a], La);
    }
  }
  return grad;
}

/// Sampled nonnegativity check (cell centers and corners).
inline void check_nonnegative(const TestFunction& f, const Mesh& mesh) {
  if (f.is_vector) throw std::invalid_argument("check_nonnegative: vector test function");
  const int nx = mesh.cells[0];
  const int ny = mesh.dim == 2 ? mesh.cells[1] : 0;
  for (int i = 0; i <= 2 * nx; ++i) {
    const double x = 0.5 * i * mesh.dx(0);
    for (int j = 0; j <= (mesh.dim == 2 ? 2 * ny : 0); ++j) {
      const double y = mesh.dim == 2 ? 0.5 * j * mesh.dx(1) : 0.0;
      if (test_scalar(f, mesh, x, y) < -1e-12)
        throw std::invalid_argument("test function must be nonnegative");
    }
  }
}

/// Sampled wall-tangency check: component a must vanish on the walls
/// normal to axis a.
inline void check_tangency(const TestFunction& f, const Mesh& mesh) {
  if (!f.is_vector) throw std::invalid_argument("check_tangency: scalar test function");
  const int samples = 64;
  for (int a = 0; a < mesh.dim; ++a) {
    for (int side = 0; side < 2; ++side) {
      const double wall = side == 0 ? 0.0 : mesh.extent[a];
      for (int k = 0; k <= samples; ++k) {
        const double other =
            mesh.dim == 2 ? mesh.extent[1 - a] * k / samples : 0.0;
        const double x = a == 0 ? wall : other;
        const double y = a == 0 ? other : wall;
        if (std::abs(test_vector(f, mesh, x, y)[static_cast<std::size_t>(a)]) > 1e-10)
          throw std::invalid_argument("vector test function must be tangent to the walls");
      }
    }
  }
}

namespace detail {

/// Shared residual engine. Pairings P_k (field vs g) and Q_k (flux vs
/// grad g) are midpoint sums over cells at each snapshot; in time the field
/// pairings are trapezoid-averaged per interval against the EXACT increment
/// of psi (for the time-derivative term) and the exact integral of psi (for
/// the flux term). With a constant-in-space g the time term then telescopes
/// against the initial term to pure rounding whenever the paired total is
/// conserved.
inline double residual_engine(const Trajectory& traj, const TestFunction& f,
                              const std::vector<double>& P, const std::vector<double>& Q) {
  const std::vector<FieldState>& snaps = traj.snapshots;
  double res = P[0] * test_psi(f, snaps[0].time);
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const double dpsi = test_psi(f, snaps[k + 1].time) - test_psi(f, snaps[k].time);
    const double ipsi = test_Psi(f, snaps[k + 1].time) - test_Psi(f, snaps[k].time);
    res += 0.5 * (P[k] + P[k + 1]) * dpsi;
    res += 0.5 * (Q[k] + Q[k + 1]) * ipsi;
  }
  return res;
}

inline void require_support(const Trajectory& traj, const TestFunction& f) {
  if (traj.snapshots.empty()) throw std::invalid_argument("weak residual: empty trajectory");
  if (!(f.t_supp > 0.0)) throw std::invalid_argument("weak residual: t_supp must be positive");
  if (f.t_supp > traj.snapshots.back().time + 1e-12)
    throw std::invalid_argument("weak residual: test support exceeds the trajectory");
}

}  // namespace detail

/// Quadrature of rho d_t(phi) + m . grad(phi) plus the initial term; O(dx)
/// for solver output and pure rounding for constant-in-space phi.
inline double weak_residual_continuity(const Trajectory& traj, const TestFunction& phi,
                                       const ThermoParams&) {
  detail::require_support(traj, phi);
  const Mesh& mesh = traj.snapshots.front().mesh;
  const double vol = mesh.cell_volume();
  const std::size_t n = traj.snapshots.size();
  std::vector<double> P(n, 0.0), Q(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const FieldState& st = traj.snapshots[k];
    double p = 0.0, q = 0.0;
    for (int j = 0; j < (mesh.dim == 2 ? mesh.cells[1] : 1); ++j) {
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const ConservedState& c = st.cells[static_cast<std::size_t>(mesh.index(i, j))];
        const auto ctr = mesh.center(i, j);
        const double g = test_scalar(phi, mesh, ctr[0], ctr[1]);
        const auto dg = test_scalar_grad(phi, mesh, ctr[0], ctr[1]);
        p += c.rho * g;
        q += c.mom[0] * dg[0] + c.mom[1] * dg[1];
      }
    }
    P[k] = vol * p;
    Q[k] = vol * q;
  }
  return detail::residual_engine(traj, phi, P, Q);
}

/// Quadrature of m . d_t(phi) + (m x m / rho + p I) : grad(phi) plus the
/// initial term; requires wall tangency of phi.
inline double weak_residual_momentum(const Trajectory& traj, const TestFunction& phi,
                                     const ThermoParams& tp) {
  detail::require_support(traj, phi);
  const Mesh& mesh = traj.snapshots.front().mesh;
  check_tangency(phi, mesh);
  const double vol = mesh.cell_volume();
  const std::size_t n = traj.snapshots.size();
  std::vector<double> P(n, 0.0), Q(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const FieldState& st = traj.snapshots[k];
    double p = 0.0, q = 0.0;
    for (int j = 0; j < (mesh.dim == 2 ? mesh.cells[1] : 1); ++j) {
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const ConservedState& c = st.cells[static_cast<std::size_t>(mesh.index(i, j))];
        const auto ctr = mesh.center(i, j);
        const auto g = test_vector(phi, mesh, ctr[0], ctr[1]);
        const auto dg = test_vector_grad(phi, mesh, ctr[0], ctr[1]);
        p += c.mom[0] * g[0] + c.mom[1] * g[1];
        const ExtendedValue pr = pressure(c.rho, c.S, tp);
        if (pr.is_infinite())
          throw std::domain_error("weak_residual_momentum: INFINITE-energy cell");
        if (c.rho > 0.0) {
          q += (c.mom[0] * c.mom[0] * dg[0] + c.mom[0] * c.mom[1] * dg[1] +
                c.mom[1] * c.mom[0] * dg[2] + c.mom[1] * c.mom[1] * dg[3]) /
               c.rho;
        }
        q += pr.value() * (dg[0] + dg[3]);
      }
    }
    P[k] = vol * p;
    Q[k] = vol * q;
  }
  return detail::residual_engine(traj, phi, P, Q);
}

/// Signed entropy-inequality residual: minus the quadrature of
/// S d_t(phi) + (S m / rho) . grad(phi) plus the initial term. A value
/// >= -tolerance certifies the inequality; phi must be nonnegative.
inline double weak_residual_entropy(const Trajectory& traj, const TestFunction& phi,
                                    const ThermoParams&) {
  detail::require_support(traj, phi);
  const Mesh& mesh = traj.snapshots.front().mesh;
  check_nonnegative(phi, mesh);
  const double vol = mesh.cell_volume();
  const std::size_t n = traj.snapshots.size();
  std::vector<double> P(n, 0.0), Q(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const FieldState& st = traj.snapshots[k];
    double p = 0.0, q = 0.0;
    for (int j = 0; j < (mesh.dim == 2 ? mesh.cells[1] : 1); ++j) {
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const ConservedState& c = st.cells[static_cast<std::size_t>(mesh.index(i, j))];
        const auto ctr = mesh.center(i, j);
        const double g = test_scalar(phi, mesh, ctr[0], ctr[1]);
        const auto dg = test_scalar_grad(phi, mesh, ctr[0], ctr[1]);
        p += c.S * g;
        if (c.rho > 0.0) q += (c.S / c.rho) * (c.mom[0] * dg[0] + c.mom[1] * dg[1]);
      }
    }
    P[k] = vol * p;
    Q[k] = vol * q;
  }
  return -detail::residual_engine(traj, phi, P, Q);
}

/// Left/right total-entropy limits at tau from the per-step series;
/// duplicated record times (recorded jumps) resolve to first/last entry.
inline std::pair<double, double> one_sided_entropy(const std::vector<SeriesRecord>& series,
                                                   double tau) {
  if (series.empty()) throw std::invalid_argument("one_sided_entropy: empty series");
  if (tau < series.front().t || tau > series.back().t)
    throw std::invalid_argument("one_sided_entropy: tau outside the series range");
  const SeriesRecord* left = nullptr;
  const SeriesRecord* right = nullptr;
  for (const SeriesRecord& r : series) {
    if (r.t < tau) left = &r;
    if (r.t == tau) {
      if (!left || left->t < tau) left = &r;  // first record at tau
      right = &r;                             // last record at tau
    }
    if (r.t > tau) {
      if (!right) right = &r;
      break;
    }
  }
  if (!left) left = right;    // tau == front.t with no earlier record
  if (!right) right = left;   // tau == back.t
  return {left->entropy, right->entropy};
}

/// Finite atomic stand-in for a one-point Young measure.
struct EnsembleAtPoint {
  std::vector<double> weights;
  std::vector<ConservedState> states;
};

inline void validate_ensemble(const EnsembleAtPoint& e) {
  if (e.weights.size() != e.states.size() || e.weights.empty())
    throw std::invalid_argument("ensemble: weights/states size mismatch");
  double sum = 0.0;
  for (double w : e.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("ensemble: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("ensemble: weights must sum to 1");
}

/// Mean energy minus energy of the mean; nonnegative by convexity, zero
/// only for a single effective atom. INFINITE member energy gives +inf.
inline double jensen_gap(const EnsembleAtPoint& e, const ThermoParams& p) {
  validate_ensemble(e);
  ExtendedValue mean_energy;
  ConservedState mean;
  for (std::size_t i = 0; i < e.states.size(); ++i) {
    const double w = e.weights[i];
    mean_energy += total_energy(e.states[i], p).scaled(w);
    mean.rho += w * e.states[i].rho;
    mean.mom[0] += w * e.states[i].mom[0];
    mean.mom[1] += w * e.states[i].mom[1];
    mean.S += w * e.states[i].S;
  }
  if (mean_energy.is_infinite()) return std::numeric_limits<double>::infinity();
  return mean_energy.value() - total_energy(mean, p).value();
}

struct ResidualRow {
  std::string test_id;
  std::string quantity;  // continuity | momentum | entropy
  double value = 0.0;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  int time_records = 0;
  std::array<int, 2> cells = {0, 0};
};

/// The fixed library evaluated against one trajectory: scalar tests yield
/// continuity rows (plus entropy rows when certifiably nonnegative), vector
/// tests yield momentum rows.
inline ResidualReport residual_report(const Trajectory& traj,
                                      const std::vector<TestFunction>& tests,
                                      const ThermoParams& tp) {
  ResidualReport rep;
  if (traj.snapshots.empty()) throw std::invalid_argument("residual_report: empty trajectory");
  const Mesh& mesh = traj.snapshots.front().mesh;
  rep.time_records = static_cast<int>(traj.snapshots.size());
  rep.cells = {mesh.cells[0], mesh.dim == 2 ? mesh.cells[1] : 0};
  for (const TestFunction& f : tests) {
    if (f.is_vector) {
      rep.rows.push_back({f.id, "momentum", weak_residual_momentum(traj, f, tp)});
      continue;
    }
    rep.rows.push_back({f.id, "continuity", weak_residual_continuity(traj, f, tp)});
    bool nonneg = true;
    try {
      check_nonnegative(f, mesh);
    } catch (const std::invalid_argument&) {
      nonneg = false;
    }
    if (nonneg) rep.rows.push_back({f.id, "entropy", weak_residual_entropy(traj, f, tp)});
  }
  return rep;
}

/// Fixed, versioned family used by reports and the refinement study.
inline std::vector<TestFunction> standard_tests(const Mesh& mesh, double t_supp) {
  std::vector<TestFunction> out;
  auto add = [&](TestFunction f, std::string id) {
    f.t_supp = t_supp;
    f.id = std::move(id);
    out.push_back(f);
  };
  TestFunction constant;
  constant.kind = TestFunction::Kind::Trig;
  constant.mode = {0, 0};
  constant.offset = 1.0;
  constant.amplitude = 0.0;
  add(constant, "const");

  TestFunction trig1;
  trig1.mode = {1, 0};
  add(trig1, "trig-c1");

  TestFunction trig2;
  trig2.mode = {2, 0};
  add(trig2, "trig-c2");

  TestFunction trig_nn;
  trig_nn.mode = {1, 0};
  trig_nn.offset = 0.5;
  trig_nn.amplitude = 0.5;
  add(trig_nn, "trig-nn1");

  TestFunction poly_bump;
  poly_bump.kind = TestFunction::Kind::Poly;
  poly_bump.mode = {2, 0};
  add(poly_bump, "poly-nn2");

  TestFunction vec_trig;
  vec_trig.is_vector = true;
  vec_trig.mode = {1, 0};
  add(vec_trig, "trig-v1");

  TestFunction vec_poly;
  vec_poly.kind = TestFunction::Kind::Poly;
  vec_poly.is_vector = true;
  vec_poly.mode = {1, 0};
  add(vec_poly, "poly-v1");

  if (mesh.dim == 2) {
    TestFunction trig_xy;
    trig_xy.mode = {1, 1};
    add(trig_xy, "trig-c11");
    TestFunction vec_xy;
    vec_xy.is_vector = true;
    vec_xy.mode = {1, 1};
    add(vec_xy, "trig-v11");
  }
  return out;
}

}  // namespace eulab
