#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "eulab/extended_value.hpp"

namespace eulab {

/// Polytropic gas parameters plus the phase-space constants carried along
/// with every state: entropy floor, minimal total mass and the total energy
/// budget. c_v is always derived from gamma.
struct ThermoParams {
  double gamma = 1.4;
  double c_v = 2.5;        // 1/(gamma - 1), derived
  double s_floor = -1e30;  // specific-entropy lower bound
  double m_min = 1e-8;     // total-mass lower bound
  double e_ref = 1.0;      // total energy budget
  double rho_vac = 1e-12;  // vacuum threshold for field states
};

inline ThermoParams make_thermo_params(double gamma, double s_floor, double m_min,
                                       double e_ref, double rho_vac = 1e-12) {
  if (!(gamma > 1.0)) throw std::domain_error("thermo: gamma must be > 1");
  if (!(m_min > 0.0)) throw std::domain_error("thermo: m_min must be > 0");
  if (!(e_ref > 0.0)) throw std::domain_error("thermo: e_ref must be > 0");
  if (!(rho_vac >= 0.0)) throw std::domain_error("thermo: rho_vac must be >= 0");
  ThermoParams p;
  p.gamma = gamma;
  p.c_v = 1.0 / (gamma - 1.0);
  p.s_floor = s_floor;
  p.m_min = m_min;
  p.e_ref = e_ref;
  p.rho_vac = rho_vac;
  return p;
}

/// Pointwise conserved triple (rho, m, S) with S the total entropy density
/// rho*s. The momentum always carries two slots; in 1D the second is 0.
struct ConservedState {
  double rho = 0.0;
  std::array<double, 2> mom{0.0, 0.0};
  double S = 0.0;
};

inline double mom_norm2(const ConservedState& st) {
  return st.mom[0] * st.mom[0] + st.mom[1] * st.mom[1];
}

/// |m|^2/(2 rho), extended to the l.s.c. convex closure: 0 on exact vacuum,
/// INFINITE for momentum without mass (and off-domain rho < 0).
inline ExtendedValue kinetic_energy(const ConservedState& st) {
  const double m2 = mom_norm2(st);
  if (st.rho > 0.0) return ExtendedValue(0.5 * m2 / st.rho);
  if (st.rho == 0.0 && m2 == 0.0) return ExtendedValue(0.0);
  return ExtendedValue::infinite();
}

/// p(rho, S) = rho^gamma exp(S/(c_v rho)), with the vacuum cases 0 (S <= 0)
/// and INFINITE (S > 0 or rho < 0).
inline ExtendedValue pressure(double rho, double S, const ThermoParams& p) {
  if (rho > 0.0) {
    return ExtendedValue(std::pow(rho, p.gamma) * std::exp(S / (p.c_v * rho)));
  }
  if (rho == 0.0 && S <= 0.0) return ExtendedValue(0.0);
  return ExtendedValue::infinite();
}

/// Total energy E(rho, m, S) = kinetic + c_v p(rho, S). Convex and l.s.c.
inline ExtendedValue total_energy(const ConservedState& st, const ThermoParams& p) {
  return kinetic_energy(st) + pressure(st.rho, st.S, p).scaled(p.c_v);
}

inline double specific_entropy(double rho, double theta, const ThermoParams& p) {
  if (!(rho > 0.0) || !(theta > 0.0))
    throw std::domain_error("specific_entropy: requires rho > 0 and theta > 0");
  return p.c_v * std::log(theta) - std::log(rho);
}

/// Invert S = rho (c_v log theta - log rho) for theta.
inline double temperature_from_entropy(double rho, double S, const ThermoParams& p) {
  if (!(rho > 0.0)) throw std::domain_error("temperature_from_entropy: rho must be > 0");
  return std::exp((S / rho + std::log(rho)) / p.c_v);
}

struct EnergyGradient {
  double d_rho = 0.0;
  std::array<double, 2> d_mom{0.0, 0.0};
  double d_S = 0.0;
};

/// Partial derivatives of E at an interior state:
///   dE/dm = m/rho,  dE/dS = theta,
///   dE/drho = -|m|^2/(2 rho^2) + e + p/rho - theta s.
inline EnergyGradient energy_gradient(const ConservedState& st, const ThermoParams& p) {
  if (!(st.rho > 0.0)) throw std::domain_error("energy_gradient: vacuum state");
  const double theta = temperature_from_entropy(st.rho, st.S, p);
  const double s = st.S / st.rho;
  const double e = p.c_v * theta;
  EnergyGradient g;
  g.d_mom = {st.mom[0] / st.rho, st.mom[1] / st.rho};
  g.d_S = theta;
  g.d_rho = -0.5 * mom_norm2(st) / (st.rho * st.rho) + e + theta - theta * s;
  return g;
}

/// Bregman divergence E(a) - E(b) - <grad E(b), a - b>. Requires b in the
/// interior of dom E; INFINITE energy of a propagates.
inline ExtendedValue bregman_divergence(const ConservedState& a, const ConservedState& b,
                                        const ThermoParams& p) {
  if (!(b.rho > 0.0))
    throw std::domain_error("bregman_divergence: base point on domain boundary");
  const ExtendedValue ea = total_energy(a, p);
  if (ea.is_infinite()) return ExtendedValue::infinite();
  const double eb = total_energy(b, p).finite_value();
  const EnergyGradient g = energy_gradient(b, p);
  const double lin = g.d_rho * (a.rho - b.rho) + g.d_mom[0] * (a.mom[0] - b.mom[0]) +
                     g.d_mom[1] * (a.mom[1] - b.mom[1]) + g.d_S * (a.S - b.S);
  return ExtendedValue(ea.value() - lin - eb);
}

/// Constant maximal-entropy state at fixed mass and energy budget.
struct EquilibriumState {
  double rho_bar = 1.0;
  double theta_bar = 1.0;
  double S_bar_density = 0.0;  // rho_bar * s(rho_bar, theta_bar)
};

inline EquilibriumState equilibrium(double M0, double e_ref, double volume,
                                    const ThermoParams& p) {
  if (!(volume > 0.0)) throw std::domain_error("equilibrium: volume must be > 0");
  if (!(M0 >= p.m_min)) throw std::domain_error("equilibrium: total mass below m_min");
  if (!(e_ref > 0.0)) throw std::domain_error("equilibrium: e_ref must be > 0");
  EquilibriumState eq;
  eq.rho_bar = M0 / volume;
  eq.theta_bar = e_ref / (p.c_v * M0);
  eq.S_bar_density = eq.rho_bar * specific_entropy(eq.rho_bar, eq.theta_bar, p);
  return eq;
}

/// Integrand of the cost functional: E(rho, m, S) - theta_bar S.
inline ExtendedValue cost_density(const ConservedState& st, const EquilibriumState& eq,
                                  const ThermoParams& p) {
  return total_energy(st, p).minus_finite(eq.theta_bar * st.S);
}

/// G(y) = E0 log(E0/(E0 - y)) - y: the guaranteed cost drop of the entropy
/// bump at defect y. Strictly increasing, G(0) = 0.
inline double jump_function_G(double y, double e_ref) {
  if (!(y >= 0.0) || !(y < e_ref))
    throw std::domain_error("jump_function_G: requires 0 <= y < e_ref");
  return e_ref * std::log(e_ref / (e_ref - y)) - y;
}

/// Conserved state at (rho, velocity u, temperature theta).
inline ConservedState state_from_primitive(double rho, const std::array<double, 2>& u,
                                           double theta, const ThermoParams& p) {
  ConservedState st;
  st.rho = rho;
  st.mom = {rho * u[0], rho * u[1]};
  st.S = rho * specific_entropy(rho, theta, p);
  return st;
}

}  // namespace eulab
