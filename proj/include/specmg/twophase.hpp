#pragma once

#include <functional>
#include <string>
#include <vector>

#include "specmg/coarse.hpp"
#include "specmg/field.hpp"
#include "specmg/grid.hpp"
#include "specmg/krylov.hpp"
#include "specmg/tpfa.hpp"

namespace specmg {

/// Field-unit conversions applied at ingestion. Internally: lengths in ft,
/// time in days, volumes in ft^3, pressure in psi, viscosity in cP, and
/// permeability prescaled so Darcy velocity (k/mu) grad p comes out in ft/day.
constexpr double kBblToFt3 = 5.614583;
constexpr double kMdToInternal = 1.127e-3 * kBblToFt3;

void scale_permeability(PermeabilityField& f, double factor);

/// Quadratic relative permeabilities on effective saturation
/// s* = (s - 0.2) / 0.6; water and oil viscosities in cP.
struct FluidModel {
  double mu_w = 0.3;
  double mu_o = 3.0;
  double s_min = 0.2;
  double s_max = 0.8;

  double effective(double s) const {
    const double e = (s - s_min) / (s_max - s_min);
    return e < 0.0 ? 0.0 : (e > 1.0 ? 1.0 : e);
  }
  double krw(double s) const {
    const double e = effective(s);
    return e * e;
  }
  double kro(double s) const {
    const double e = 1.0 - effective(s);
    return e * e;
  }
  double total_mobility(double s) const { return krw(s) / mu_w + kro(s) / mu_o; }
  double frac_flow(double s) const { return (krw(s) / mu_w) / total_mobility(s); }
  /// Relperm-free two-phase coupling slope of the producer model.
  double coupling_slope() const { return 1.0 / mu_w + 1.0 / mu_o; }
};

/// Peaceman-type well index for a cell column of size hx by hy and wellbore
/// radius r_wb (all in ft).
double well_index(double hx, double hy, double r_wb);

struct WellSet {
  struct Injector {
    std::vector<int> cells;
    double rate = 0.0;  // total volumetric rate, ft^3/day, injected as water
  };
  struct Producer {
    std::vector<int> cells;
    double p_bh = 0.0;             // bottom-hole pressure, psi
    std::vector<double> wi_kappa;  // WI * sqrt(kx ky) per cell
  };
  std::vector<Injector> injectors;
  std::vector<Producer> producers;
  /// Weight the producer coupling by the cell's total mobility instead of
  /// the relperm-free slope 1/mu_w + 1/mu_o.
  bool mobility_weighted = false;
};

/// Center injector column, producer columns in the four corners.
WellSet five_spot(const GridHierarchy& g, const PermeabilityField& f, double rate_ft3,
                  double p_bh, double r_wb);

/// Diagonal coupling and rhs for the pressure system plus the injector part
/// kept separate so transport can split water sources exactly as assembled.
struct WellSources {
  WellCoupling coupling;
  Vector inj_density;  // injector source density per cell (pure water)
};

WellSources make_well_sources(const GridHierarchy& g, const WellSet& wells,
                              const FluidModel& fluid, const Vector* lambda_cells);

/// Per-cell total mobility and fractional flow.
void mobilities(const FluidModel& fluid, const Vector& s, Vector& lambda, Vector& fw);

struct PressureStepConfig {
  SelectionRule rule_c = SelectionRule::fixed(4);
  SelectionRule rule_cc = SelectionRule::fixed(4);
  ThreeGridPreconditioner::Options tg;
  SolverConfig solver;  // two-phase default rtol is set by the driver
};

/// Reusable spectral spaces across pressure steps.
struct CoarsePair {
  CoarseSpace wc, wcc;
  bool ready = false;
};

struct PressureStepResult {
  Vector p;
  FaceFluxField flux;
  SolveReport report;
  Vector q_producer;  // per-cell producer source density at the solved p
  double conservation_defect = 0.0;
};

/// One IMPES pressure solve: mobility-scaled assembly (arithmetic face
/// mobility), spectral spaces built from block-local problems of the scaled
/// operator (well terms enter the global system only), warm start from the
/// previous pressure.
PressureStepResult pressure_step(const GridHierarchy& g, const NormalizedField& nf,
                                 const FluidModel& fluid, const WellSet& wells,
                                 const Vector& s, const PressureStepConfig& cfg,
                                 CoarsePair& spaces, bool rebuild_spaces,
                                 const Vector* p_prev);

struct TransportResult {
  int substeps = 0;
  double dt_total = 0.0;
  double max_delta_s = 0.0;
  double water_in = 0.0;   // ft^3
  double water_out = 0.0;  // ft^3
};

/// Explicit upstream-weighted transport. Each substep moves the fastest cell
/// by at most ds_max; producers remove water at the cell's own fractional
/// flow; saturation bounds are enforced to 1e-9 slack.
TransportResult transport_substeps(const GridHierarchy& g, const FluidModel& fluid,
                                   const WellSources& sources, const FaceFluxField& flux,
                                   const Vector& p, const Vector& phi, Vector& s,
                                   double& time, double ds_max, int substeps,
                                   double dt_max);

struct SimulationConfig {
  GridHierarchy grid;
  PermeabilityField field;  // already in internal units
  FluidModel fluid;
  WellSet wells;
  PressureStepConfig pressure;
  double ds_max = 1e-3;
  int substeps = 50;
  int max_outer_steps = 200;
  double end_time = 1e30;  // days
  double dt_max = 0.0;     // 0 selects end_time / 1000
  int refresh_every = 1;   // rebuild spectral spaces every k pressure steps
};

struct OuterStepRecord {
  int step = 0;
  double time = 0.0;
  double dt = 0.0;
  int iterations = 0;
  double max_delta_s = 0.0;
  double water_in = 0.0;
  double water_out = 0.0;
  double balance_error = 0.0;  // relative water balance defect of the step
  double s_low = 0.0;
  double s_high = 0.0;
  double conservation_defect = 0.0;
};

struct SimulationResult {
  std::vector<OuterStepRecord> steps;
  Vector p;
  Vector s;
  double time = 0.0;
};

/// Called after every completed outer step; lets callers stream per-step
/// records and state snapshots even when a later step fails.
using SnapshotHook =
    std::function<void(const OuterStepRecord& rec, const Vector& p, const Vector& s)>;

SimulationResult run_simulation(const SimulationConfig& cfg,
                                const SnapshotHook& snapshot = nullptr);

}  // namespace specmg
