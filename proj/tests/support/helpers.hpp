#pragma once

// Shared test utilities: deterministic random states, finite differences
// and grid projections of the exact Riemann solution.

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/initial.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"
#include "support/exact_riemann.hpp"

namespace testutil {

inline eulab::Mesh mesh1d(int n, double length = 1.0) {
  return eulab::make_mesh(1, {n, 1}, {length, 1.0});
}

inline eulab::Mesh mesh2d(int nx, int ny, double lx = 1.0, double ly = 1.0) {
  return eulab::make_mesh(2, {nx, ny}, {lx, ly});
}

/// Deterministic interior state stream: positive density, moderate
/// momentum, entropy near physical magnitudes.
inline eulab::ConservedState random_state(eulab::SplitMix64& rng, bool planar = true) {
  eulab::ConservedState st;
  st.rho = 0.1 + 2.0 * rng.uniform01();
  st.mom[0] = 2.0 * rng.uniform01() - 1.0;
  st.mom[1] = planar ? 0.0 : 2.0 * rng.uniform01() - 1.0;
  st.S = st.rho * (2.0 * rng.uniform01() - 1.0);
  return st;
}

/// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Gauss-5 cell averages of the exact Riemann solution's conserved fields
/// at time t > 0 (rho, rho u, rho s).
inline eulab::FieldState riemann_exact_field(const eulab::Mesh& mesh,
                                             const oracle::ExactRiemann& ex, double x_split,
                                             double t, const eulab::ThermoParams& tp) {
  const std::array<double, 5> node = {-0.90617984593866396, -0.53846931010568311, 0.0,
                                      0.53846931010568311, 0.90617984593866396};
  const std::array<double, 5> wt = {0.23692688505618909, 0.47862867049936647,
                                    0.56888888888888889, 0.47862867049936647,
                                    0.23692688505618909};
  eulab::FieldState f = eulab::make_field(mesh, t);
  const double dx = mesh.dx(0);
  for (int i = 0; i < mesh.cells[0]; ++i) {
    double rho = 0.0, mom = 0.0, S = 0.0;
    for (int q = 0; q < 5; ++q) {
      const double x = mesh.center(i, 0)[0] + 0.5 * dx * node[q];
      const oracle::Side s = ex.sample((x - x_split) / t);
      const double theta = s.p / s.rho;
      const double w = 0.5 * wt[q];
      rho += w * s.rho;
      mom += w * s.rho * s.u;
      S += w * s.rho * eulab::specific_entropy(s.rho, theta, tp);
    }
    f.cells[static_cast<std::size_t>(i)] = {rho, {mom, 0.0}, S};
  }
  return f;
}

/// L1 distance between the density columns of two fields on one mesh.
inline double l1_rho(const eulab::FieldState& a, const eulab::FieldState& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    acc += std::abs(a.cells[i].rho - b.cells[i].rho);
  return acc * a.mesh.cell_volume();
}

inline bool bitwise_equal(const eulab::FieldState& a, const eulab::FieldState& b) {
  return eulab::hash_field(a) == eulab::hash_field(b) && a.time == b.time;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Non-comment rows of a whitespace-separated numeric table.
inline std::vector<std::vector<double>> numeric_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    rows.push_back(std::move(vals));
  }
  return rows;
}

/// Bitwise cell comparison that ignores the clock.
inline bool cells_bitwise_equal(const eulab::FieldState& a, const eulab::FieldState& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const eulab::ConservedState& x = a.cells[i];
    const eulab::ConservedState& y = b.cells[i];
    if (x.rho != y.rho || x.mom[0] != y.mom[0] || x.mom[1] != y.mom[1] || x.S != y.S)
      return false;
  }
  return true;
}

}  // namespace testutil
