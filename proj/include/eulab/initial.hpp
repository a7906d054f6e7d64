#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

/// Pointwise primitive fields (rho, u, theta) as functions of position.
/// u1 may be empty in 1D.
struct PrimitiveProfile {
  std::function<double(double, double)> rho;
  std::function<double(double, double)> u0;
  std::function<double(double, double)> u1;
  std::function<double(double, double)> theta;
};

/// A realized initial field together with continuum reference totals taken
/// from the profile itself (not from the cell averages).
struct InitialData {
  bool ok = true;  // false when the profile is not strictly positive
  FieldState field;
  double mass = 0.0;     // continuum total mass
  double e_ref = 0.0;    // continuum total energy
  double s_floor = 0.0;  // pointwise minimum of the specific entropy
};

namespace detail {

// Gauss-Legendre 5-point rule on [-1, 1].
constexpr std::array<double, 5> kGaussNode = {
    -0.90617984593866396, -0.53846931010568311, 0.0, 0.53846931010568311, 0.90617984593866396};
constexpr std::array<double, 5> kGaussWeight = {
    0.23692688505618908, 0.47862867049936647, 0.56888888888888889, 0.47862867049936647,
    0.23692688505618908};

}  // namespace detail

/// Cell-average the conserved densities (rho, m, S = rho s) of a pointwise
/// profile with a per-cell Gauss rule. Total energy of the averaged field
/// never exceeds the continuum value (convexity of the energy), so the
/// averaging gap is a genuine, mesh-shrinking energy defect.
///
/// Reference totals use the same rule on a refinement of the mesh with at
/// least ref_min points per axis, where the quadrature error is negligible
/// for smooth profiles.
inline InitialData realize_profile(const Mesh& mesh, const PrimitiveProfile& prof, double gamma,
                                   int ref_min = 4096) {
  if (!prof.rho || !prof.u0 || !prof.theta)
    throw std::invalid_argument("realize_profile: rho, u0 and theta are required");
  const double c_v = 1.0 / (gamma - 1.0);
  const bool two_d = mesh.dim == 2;
  auto u1_at = [&](double x, double y) { return prof.u1 ? prof.u1(x, y) : 0.0; };

  InitialData out;
  out.field = make_field(mesh, 0.0);
  out.s_floor = std::numeric_limits<double>::infinity();

  // Pass 1: per-cell averages of the conserved densities.
  for (int j = 0; j < (two_d ? mesh.cells[1] : 1); ++j) {
    for (int i = 0; i < mesh.cells[0]; ++i) {
      const int cell = mesh.index(i, j);
      const auto ctr = mesh.center(i, j);
      double rho = 0.0, m0 = 0.0, m1 = 0.0, S = 0.0;
      for (int qx = 0; qx < 5; ++qx) {
        const double x = ctr[0] + 0.5 * mesh.dx(0) * detail::kGaussNode[qx];
        for (int qy = 0; qy < (two_d ? 5 : 1); ++qy) {
          const double y = two_d ? ctr[1] + 0.5 * mesh.dx(1) * detail::kGaussNode[qy] : 0.0;
          const double w = 0.5 * detail::kGaussWeight[qx] *
                           (two_d ? 0.5 * detail::kGaussWeight[qy] : 1.0);
          const double r = prof.rho(x, y);
          const double th = prof.theta(x, y);
          if (!(r > 0.0) || !(th > 0.0)) {
            out.ok = false;
            return out;
          }
          const double s = c_v * std::log(th) - std::log(r);
          rho += w * r;
          m0 += w * r * prof.u0(x, y);
          m1 += w * r * u1_at(x, y);
          S += w * r * s;
        }
      }
      out.field.cells[static_cast<std::size_t>(cell)] = ConservedState{rho, {m0, m1}, S};
    }
  }

  // Pass 2: continuum totals on a refined grid.
  const int rx = std::max(1, (ref_min + mesh.cells[0] - 1) / mesh.cells[0]);
  const int ref2 = 512;
  const int rfx = two_d ? std::max(1, (ref2 + mesh.cells[0] - 1) / mesh.cells[0]) : rx;
  const int rfy = two_d ? std::max(1, (ref2 + mesh.cells[1] - 1) / mesh.cells[1]) : 1;
  const int nx = mesh.cells[0] * rfx;
  const int ny = two_d ? mesh.cells[1] * rfy : 1;
  const double hx = mesh.extent[0] / nx;
  const double hy = two_d ? mesh.extent[1] / ny : 1.0;
  const double sub_vol = hx * (two_d ? hy : 1.0);
  double mass = 0.0, energy = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + 0.5) * hx;
      const double cy = two_d ? (j + 0.5) * hy : 0.0;
      for (int qx = 0; qx < 5; ++qx) {
        const double x = cx + 0.5 * hx * detail::kGaussNode[qx];
        for (int qy = 0; qy < (two_d ? 5 : 1); ++qy) {
          const double y = two_d ? cy + 0.5 * hy * detail::kGaussNode[qy] : 0.0;
          const double w = 0.5 * detail::kGaussWeight[qx] *
                           (two_d ? 0.5 * detail::kGaussWeight[qy] : 1.0);
          const double r = prof.rho(x, y);
          const double th = prof.theta(x, y);
          if (!(r > 0.0) || !(th > 0.0)) {
            out.ok = false;
            return out;
          }
          const double v0 = prof.u0(x, y);
          const double v1 = u1_at(x, y);
          mass += w * sub_vol * r;
          energy += w * sub_vol * (c_v * r * th + 0.5 * r * (v0 * v0 + v1 * v1));
          out.s_floor = std::min(out.s_floor, c_v * std::log(th) - std::log(r));
        }
      }
    }
  }
  out.mass = mass;
  out.e_ref = energy;
  return out;
}

/// Classic two-state shock-tube data (density/velocity/pressure per side).
struct RiemannSetup {
  double rho_l = 1.0, u_l = 0.0, p_l = 1.0;
  double rho_r = 0.125, u_r = 0.0, p_r = 0.1;
  double x_split = 0.5;
};

/// Exact cell averages of the piecewise-constant conserved densities; the
/// reference totals are closed-form. 1D only.
inline InitialData make_riemann(const Mesh& mesh, double gamma, const RiemannSetup& c = {}) {
  if (mesh.dim != 1) throw std::invalid_argument("make_riemann: 1D mesh required");
  if (!(c.rho_l > 0.0 && c.rho_r > 0.0 && c.p_l > 0.0 && c.p_r > 0.0))
    throw std::domain_error("make_riemann: states must have positive density and pressure");
  const double c_v = 1.0 / (gamma - 1.0);
  const double L = mesh.extent[0];
  const double split = std::clamp(c.x_split, 0.0, L);
  auto side_entropy = [&](double rho, double p) { return c_v * std::log(p / rho) - std::log(rho); };
  const double sL = side_entropy(c.rho_l, c.p_l);
  const double sR = side_entropy(c.rho_r, c.p_r);

  InitialData out;
  out.field = make_field(mesh, 0.0);
  const double dx = mesh.dx(0);
  for (int i = 0; i < mesh.cells[0]; ++i) {
    const double a = i * dx;
    const double fl = std::clamp((split - a) / dx, 0.0, 1.0);
    ConservedState st;
    st.rho = fl * c.rho_l + (1.0 - fl) * c.rho_r;
    st.mom = {fl * c.rho_l * c.u_l + (1.0 - fl) * c.rho_r * c.u_r, 0.0};
    st.S = fl * c.rho_l * sL + (1.0 - fl) * c.rho_r * sR;
    out.field.cells[static_cast<std::size_t>(i)] = st;
  }
  out.mass = split * c.rho_l + (L - split) * c.rho_r;
  out.e_ref = split * (c_v * c.p_l + 0.5 * c.rho_l * c.u_l * c.u_l) +
              (L - split) * (c_v * c.p_r + 0.5 * c.rho_r * c.u_r * c.u_r);
  out.s_floor = std::min(sL, sR);
  return out;
}

struct UniformSetup {
  double rho = 1.0, u0 = 0.0, u1 = 0.0, theta = 1.0;
};

inline InitialData make_uniform(const Mesh& mesh, double gamma, const UniformSetup& c = {}) {
  if (!(c.rho > 0.0 && c.theta > 0.0))
    throw std::domain_error("make_uniform: rho and theta must be positive");
  const double c_v = 1.0 / (gamma - 1.0);
  const double s = c_v * std::log(c.theta) - std::log(c.rho);
  const double u1 = mesh.dim == 2 ? c.u1 : 0.0;
  InitialData out;
  out.field = make_field(mesh, 0.0);
  for (ConservedState& st : out.field.cells)
    st = ConservedState{c.rho, {c.rho * c.u0, c.rho * u1}, c.rho * s};
  const double V = mesh.domain_volume();
  out.mass = c.rho * V;
  out.e_ref = V * (c_v * c.rho * c.theta + 0.5 * c.rho * (c.u0 * c.u0 + u1 * u1));
  out.s_floor = s;
  return out;
}

/// Low-mode trigonometric perturbation of a rest equilibrium. Velocity
/// components vanish on their walls, so the data is wall-compatible. The
/// coefficient stream depends only on the seed (never on the mesh), drawn
/// in a fixed order: rho modes, u0 modes, theta modes, then u1 modes (2D).
struct SmoothSetup {
  double amplitude = 0.05;
  int modes = 4;
  std::uint64_t seed = 1;
  double rho_bar = 1.0;
  double theta_bar = 1.0;
};

inline PrimitiveProfile smooth_profile(const Mesh& mesh, const SmoothSetup& c) {
  if (c.modes < 1 || c.modes > 64) throw std::invalid_argument("smooth_profile: modes in [1,64]");
  if (!(c.amplitude >= 0.0)) throw std::invalid_argument("smooth_profile: amplitude must be >= 0");
  const int K = c.modes;
  SplitMix64 rng(c.seed);
  std::vector<double> cr(static_cast<std::size_t>(K)), cu0(static_cast<std::size_t>(K)),
      cth(static_cast<std::size_t>(K)), cu1(static_cast<std::size_t>(K), 0.0);
  for (double& v : cr) v = rng.uniform_sym();
  for (double& v : cu0) v = rng.uniform_sym();
  for (double& v : cth) v = rng.uniform_sym();
  const bool two_d = mesh.dim == 2;
  if (two_d)
    for (double& v : cu1) v = rng.uniform_sym();

  const double L0 = mesh.extent[0];
  const double L1 = two_d ? mesh.extent[1] : 1.0;
  const double a = c.amplitude;
  const double pi = 3.14159265358979323846;

  auto series = [=](const std::vector<double>& coef, auto mode_fn) {
    return [=](double x, double y) {
      double acc = 0.0;
      for (int k = 1; k <= K; ++k) acc += coef[static_cast<std::size_t>(k - 1)] / k * mode_fn(k, x, y);
      return a * acc;
    };
  };
  auto cos_xy = [=](int k, double x, double y) {
    const double f = std::cos(k * pi * x / L0);
    return two_d ? f * std::cos(k * pi * y / L1) : f;
  };
  auto sin_x = [=](int k, double x, double y) {
    const double f = std::sin(k * pi * x / L0);
    return two_d ? f * std::cos(k * pi * y / L1) : f;
  };
  auto sin_y = [=](int k, double x, double y) {
    return std::sin(k * pi * y / L1) * std::cos(k * pi * x / L0);
  };

  auto drho = series(cr, cos_xy);
  auto du0 = series(cu0, sin_x);
  auto dth = series(cth, cos_xy);
  auto du1 = series(cu1, sin_y);

  PrimitiveProfile prof;
  prof.rho = [=](double x, double y) { return c.rho_bar * (1.0 + drho(x, y)); };
  prof.u0 = du0;
  prof.theta = [=](double x, double y) { return c.theta_bar * (1.0 + dth(x, y)); };
  if (two_d) prof.u1 = du1;
  return prof;
}

inline InitialData make_smooth(const Mesh& mesh, double gamma, const SmoothSetup& c,
                               int ref_min = 4096) {
  InitialData d = realize_profile(mesh, smooth_profile(mesh, c), gamma, ref_min);
  if (!d.ok) throw std::domain_error("make_smooth: profile not strictly positive");
  return d;
}

}  // namespace eulab
