#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "eulab/thermo.hpp"
#include "eulab/util.hpp"

namespace eulab {

/// Uniform cell-centered grid on a 1D interval or 2D box. In 1D the second
/// axis is inert (one cell of extent 1).
struct Mesh {
  int dim = 1;
  std::array<int, 2> cells{4, 1};
  std::array<double, 2> extent{1.0, 1.0};

  double dx(int axis) const { return extent[axis] / cells[axis]; }
  double cell_volume() const { return dim == 1 ? dx(0) : dx(0) * dx(1); }
  double domain_volume() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }
  int num_cells() const { return cells[0] * cells[1]; }
  int index(int i, int j = 0) const { return j * cells[0] + i; }
  std::array<double, 2> center(int i, int j = 0) const {
    return {(i + 0.5) * dx(0), dim == 2 ? (j + 0.5) * dx(1) : 0.0};
  }

  bool operator==(const Mesh& o) const {
    return dim == o.dim && cells == o.cells && extent == o.extent;
  }
};

inline Mesh make_mesh(int dim, const std::array<int, 2>& cells,
                      const std::array<double, 2>& extent) {
  if (dim != 1 && dim != 2) throw std::domain_error("mesh: dim must be 1 or 2");
  Mesh m;
  m.dim = dim;
  m.cells = {cells[0], dim == 2 ? cells[1] : 1};
  m.extent = {extent[0], dim == 2 ? extent[1] : 1.0};
  for (int a = 0; a < dim; ++a) {
    if (m.cells[a] < 4) throw std::domain_error("mesh: cells_per_axis must be >= 4");
    if (!(m.extent[a] > 0.0)) throw std::domain_error("mesh: extent must be > 0");
  }
  return m;
}

/// Grid-sampled (rho, m, S) field at one instant.
struct FieldState {
  Mesh mesh;
  std::vector<ConservedState> cells;
  double time = 0.0;
};

inline FieldState make_field(const Mesh& mesh, double time = 0.0) {
  FieldState f;
  f.mesh = mesh;
  f.cells.assign(static_cast<std::size_t>(mesh.num_cells()), ConservedState{});
  f.time = time;
  return f;
}

///// Force the vacuum convention on one state: below the threshold the cell is
/// exact vacuum with m = 0, S = 0. Returns true if anything was modified.
inline bool apply_vacuum_convention(ConservedState& st, double rho_vac) {
  if (st.rho < rho_vac) {
    const bool changed = st.rho != 0.0 || st.mom[0] != 0.0 || st.mom[1] != 0.0 || st.S != 0.0;
    st = ConservedState{};
    return changed;
  }
  return false;
}

struct Totals {
  double mass = 0.0;
  ExtendedValue energy;
  double entropy = 0.0;
};

/// Midpoint quadrature of (rho, E, S) over the mesh. Fixed summation order.
inline Totals totals(const FieldState& f, const ThermoParams& p) {
  Totals t;
  double mass = 0.0, entropy = 0.0;
  ExtendedValue energy(0.0);
  for (const ConservedState& st : f.cells) {
    mass += st.rho;
    entropy += st.S;
    energy += total_energy(st, p);
  }
  const double vol = f.mesh.cell_volume();
  t.mass = mass * vol;
  t.entropy = entropy * vol;
  t.energy = energy.scaled(vol);
  return t;
}

struct EnergyDefect {
  double value = 0.0;  // clipped at 0
  double raw = 0.0;    // e_ref - total energy, unclipped
  bool violation = false;
};

/// d_E = E0 - integral of E, clipped below at 0. Excursions below
/// -1e-10 * E0 are admissibility violations and flagged.
inline EnergyDefect energy_defect(const FieldState& f, double e_ref, const ThermoParams& p) {
  EnergyDefect d;
  const ExtendedValue e = totals(f, p).energy;
  if (e.is_infinite()) {
    d.raw = -std::numeric_limits<double>::infinity();
    d.value = 0.0;
    d.violation = true;
    return d;
  }
  d.raw = e_ref - e.value();
  d.value = d.raw > 0.0 ? d.raw : 0.0;
  d.violation = d.raw < -1e-10 * e_ref;
  return d;
}

/// Structural validity of a field against the phase-space constraints:
/// cell invariants, entropy floor, minimal mass. Throws on violation.
inline void validate_field(const FieldState& f, const ThermoParams& p) {
  if (static_cast<int>(f.cells.size()) != f.mesh.num_cells())
    throw std::invalid_argument("field: cell count does not match mesh");
  for (std::size_t i = 0; i < f.cells.size(); ++i) {
    const ConservedState& st = f.cells[i];
    if (!(st.rho >= 0.0)) throw std::invalid_argument("field: negative density");
    if (st.rho == 0.0 && (st.mom[0] != 0.0 || st.mom[1] != 0.0 || st.S != 0.0))
      throw std::invalid_argument("field: vacuum cell with momentum or entropy");
    if (st.rho > 0.0 && st.S < p.s_floor * st.rho - 1e-12 * (1.0 + std::abs(st.S)))
      throw std::invalid_argument("field: entropy below floor");
  }
  if (totals(f, p).mass < p.m_min)
    throw std::invalid_argument("field: total mass below m_min");
}

/// Content hash over times and cell values (used for trajectory caching).
inline std::uint64_t hash_field(const FieldState& f) {
  std::uint64_t h = fnv1a64("field");
  h = hash_combine(h, static_cast<std::uint64_t>(f.mesh.dim));
  h = hash_combine(h, static_cast<std::uint64_t>(f.mesh.cells[0]));
  h = hash_combine(h, static_cast<std::uint64_t>(f.mesh.cells[1]));
  h = hash_combine(h, bits_of(f.mesh.extent[0]));
  h = hash_combine(h, bits_of(f.mesh.extent[1]));
  h = hash_combine(h, bits_of(f.time));
  for (const ConservedState& st : f.cells) {
    h = hash_combine(h, bits_of(st.rho));
    h = hash_combine(h, bits_of(st.mom[0]));
    h = hash_combine(h, bits_of(st.mom[1]));
    h = hash_combine(h, bits_of(st.S));
  }
  return h;
}

}  // namespace eulab
