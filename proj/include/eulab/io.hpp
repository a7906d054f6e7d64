#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eulab/config.hpp"
#include "eulab/diagnostics.hpp"
#include "eulab/field.hpp"
#include "eulab/selection.hpp"
#include "eulab/solver.hpp"
#include "eulab/statistical.hpp"
#include "eulab/thermo.hpp"
#include "eulab/util.hpp"
#include "eulab/version.hpp"

namespace eulab {

inline void write_stamp(std::ostream& os, std::uint64_t config_hash) {
  os << "# " << kToolName << " " << kToolVersion << " config=" << hex16(config_hash) << "\n";
}

/// Plain-text field snapshot. Rows carry the conserved cell values at full
/// precision plus derived pressure and temperature; vacuum cells report
/// zero for both derived columns.
inline void write_snapshot(std::ostream& os, const FieldState& f, const ThermoParams& tp,
                           std::uint64_t config_hash) {
  write_stamp(os, config_hash);
  os << "# t=" << format_g17(f.time) << " nx=" << f.mesh.cells[0];
  if (f.mesh.dim == 2) os << " ny=" << f.mesh.cells[1];
  os << "\n";
  os << (f.mesh.dim == 2 ? "# columns: i j rho m0 m1 S p theta\n"
                         : "# columns: i rho m0 S p theta\n");
  for (int j = 0; j < (f.mesh.dim == 2 ? f.mesh.cells[1] : 1); ++j) {
    for (int i = 0; i < f.mesh.cells[0]; ++i) {
      const ConservedState& c = f.cells[static_cast<std::size_t>(f.mesh.index(i, j))];
      double p = 0.0, th = 0.0;
      if (c.rho > 0.0) {
        p = pressure(c.rho, c.S, tp).value();
        th = temperature_from_entropy(c.rho, c.S, tp);
      }
      os << i;
      if (f.mesh.dim == 2) os << " " << j;
      os << " " << format_g17(c.rho) << " " << format_g17(c.mom[0]);
      if (f.mesh.dim == 2) os << " " << format_g17(c.mom[1]);
      os << " " << format_g17(c.S) << " " << format_g17(p) << " " << format_g17(th) << "\n";
    }
  }
}

/// Inverse of write_snapshot up to the derived columns; conserved values
/// round-trip bitwise. The mesh extent is not stored in the file and must
/// be supplied.
inline FieldState read_snapshot(std::istream& is,
                                const std::array<double, 2>& extent = {1.0, 1.0}) {
  std::string line;
  double t = 0.0;
  int nx = 0, ny = 0;
  bool header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        if (tok.rfind("t=", 0) == 0) {
          t = std::stod(tok.substr(2));
          header = true;
        } else if (tok.rfind("nx=", 0) == 0) {
          nx = std::stoi(tok.substr(3));
        } else if (tok.rfind("ny=", 0) == 0) {
          ny = std::stoi(tok.substr(3));
        }
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (!header || nx < 1) throw std::runtime_error("snapshot: missing or bad header");
  const int dim = ny > 0 ? 2 : 1;
  const Mesh mesh = make_mesh(dim, {nx, dim == 2 ? ny : 1}, extent);
  if (static_cast<int>(rows.size()) != mesh.num_cells())
    throw std::runtime_error("snapshot: row count does not match header");
  FieldState f = make_field(mesh, t);
  const std::size_t want = dim == 2 ? 8 : 6;
  for (const auto& r : rows) {
    if (r.size() != want) throw std::runtime_error("snapshot: bad row width");
    const int i = static_cast<int>(r[0]);
    const int j = dim == 2 ? static_cast<int>(r[1]) : 0;
    if (i < 0 || i >= mesh.cells[0] || j < 0 || (dim == 2 && j >= mesh.cells[1]))
      throw std::runtime_error("snapshot: cell index out of range");
    ConservedState& c = f.cells[static_cast<std::size_t>(mesh.index(i, j))];
    const std::size_t b = dim == 2 ? 2 : 1;
    c.rho = r[b];
    c.mom[0] = r[b + 1];
    c.mom[1] = dim == 2 ? r[b + 2] : 0.0;
    c.S = r[b + (dim == 2 ? 3 : 2)];
  }
  return f;
}

/// Per-step conserved totals and cost along a run. The defect column is
/// scaled by the configured trace constant (1 leaves it untouched).
inline void write_series(std::ostream& os, const std::vector<SeriesRecord>& series,
                         std::uint64_t config_hash, double defect_scale = 1.0) {
  write_stamp(os, config_hash);
  os << "# columns: t mass energy entropy defect cost\n";
  for (const SeriesRecord& r : series) {
    os << format_g17(r.t) << " " << format_g17(r.mass) << " " << format_g17(r.energy) << " "
       << format_g17(r.entropy) << " " << format_g17(r.defect * defect_scale) << " "
       << format_g17(r.cost) << "\n";
  }
}

/// One row per candidate: id, scheme descriptor, discounted cost, its tail
/// bound, admissibility and the chosen flag.
inline void write_selection(std::ostream& os, const SelectionResult& sel,
                            const CandidateSet& set, std::uint64_t config_hash) {
  write_stamp(os, config_hash);
  os << "# tie=" << (sel.tie ? 1 : 0) << "\n";
  os << "# columns: id scheme cost tail admissible chosen\n";
  for (std::size_t i = 0; i < sel.scores.size(); ++i) {
    const CandidateScore& s = sel.scores[i];
    os << s.id << " \"" << scheme_descriptor(set.items[i].scheme) << "\" "
       << format_g17(s.cost) << " " << format_g17(s.tail) << " " << (s.admissible ? 1 : 0)
       << " " << (s.chosen ? 1 : 0) << "\n";
  }
}

/// One row per (test function, quantity) pair.
inline void write_residuals(std::ostream& os, const ResidualReport& rep,
                            std::uint64_t config_hash) {
  write_stamp(os, config_hash);
  os << "# time_records=" << rep.time_records << " nx=" << rep.cells[0];
  if (rep.cells[1] > 1) os << " ny=" << rep.cells[1];
  os << "\n";
  os << "# columns: test quantity value\n";
  for (const ResidualRow& r : rep.rows)
    os << r.test_id << " " << r.quantity << " " << format_g17(r.value) << "\n";
}

/// One row per (time, observable) expectation.
inline void write_expectation_series(std::ostream& os,
                                     const std::vector<ExpectationRecord>& recs,
                                     std::uint64_t config_hash, double defect_scale = 1.0) {
  write_stamp(os, config_hash);
  os << "# columns: t observable value\n";
  for (const ExpectationRecord& r : recs)
    os << format_g17(r.t) << " " << r.observable_id << " "
       << format_g17(r.value * defect_scale) << "\n";
}

/// JSON manifest: tool identity, config hash, the full effective config as
/// a hierarchical section, and the files the command produced.
inline void write_manifest(std::ostream& os, const RunConfig& cfg, const std::string& command,
                           const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = hex16(cfg.config_hash);
  m["config"] = nlohmann::json::parse(cfg.canonical);
  m["outputs"] = outputs;
  os << m.dump(2) << "\n";
}

}  // namespace eulab
