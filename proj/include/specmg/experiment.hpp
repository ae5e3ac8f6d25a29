#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specmg/config.hpp"
#include "specmg/coarse.hpp"
#include "specmg/field.hpp"
#include "specmg/grid.hpp"
#include "specmg/krylov.hpp"
#include "specmg/mgprec.hpp"
#include "specmg/tpfa.hpp"
#include "specmg/twophase.hpp"

namespace specmg {

/// Invalid or inconsistent configuration (CLI exit code 2). Solver
/// breakdowns surface as SolverFailure (exit code 3), declared with the
/// Krylov drivers.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------- config -> objects

GridHierarchy grid_from_config(const Config& cfg);
PermeabilityField field_from_config(const Config& cfg, const GridHierarchy& g);
BoundarySpec bc_from_config(const Config& cfg, int dim);
SelectionRule rule_from_config(const Config& cfg, Level level);
ThreeGridPreconditioner::Options tg_from_config(const Config& cfg);
SolverConfig solver_from_config(const Config& cfg);
SimulationConfig simulation_from_config(const Config& cfg);

/// Copy of `cfg` with every key the run consumes materialized to its
/// effective value (defaults included). Serializing it yields the run
/// manifest; re-running from the manifest reproduces the run.
Config resolve_config(const Config& cfg);

// ------------------------------------------------------------ one solve

struct PointResult {
  int n = 0;
  int dim_c = 0;
  int dim_cc = 0;
  int iterations = 0;
  bool converged = false;
  double relres = 0.0;
  double conservation = 0.0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  std::optional<Spectrum> spectrum;
  Vector p;  // kept only when requested
};

PointResult solve_single_phase(const Config& cfg, bool keep_solution);

// --------------------------------------------------------------- drivers

/// Each driver writes artifacts under out_dir (created if missing) and
/// returns 0 on success. Config problems throw ConfigError, solver
/// breakdowns SolverFailure; partial results are flushed before the throw.
int run_solve(const Config& cfg, const std::string& out_dir);
int run_sweep(const Config& cfg, const std::string& out_dir);
int run_verify_theory(const Config& cfg, const std::string& out_dir);
int run_simulate(const Config& cfg, const std::string& out_dir);

/// Exact against inexact coarse solves over a list of sd values; writes
/// compare.csv with measured and closed-form coarse dimensions.
int compare_exact_inexact(const Config& cfg, const std::string& out_dir);

// --------------------------------------------------------------- output

/// Shortest decimal form at 12 significant digits; deterministic across
/// runs of the same build.
std::string format_double(double v);

/// Legacy VTK structured-points file with the given cell fields.
void write_vtk_cells(const std::string& path, const GridHierarchy& g,
                     const std::vector<std::pair<std::string, const Vector*>>& fields);

}  // namespace specmg
