#pragma once

#include <array>
#include <optional>

#include "specmg/field.hpp"
#include "specmg/grid.hpp"
#include "specmg/linalg.hpp"

namespace specmg {

/// Boundary condition per side: no-flow by default, optionally a homogeneous
/// Dirichlet closure (half-cell two-point term) on selected sides.
struct BoundarySpec {
  std::array<std::array<bool, 2>, 3> dirichlet = {{{false, false}, {false, false}, {false, false}}};

  static BoundarySpec no_flow() { return {}; }
  static BoundarySpec all_dirichlet(int dim) {
    BoundarySpec b;
    for (int a = 0; a < dim; ++a) b.dirichlet[a] = {true, true};
    return b;
  }
  bool any() const {
    for (const auto& s : dirichlet)
      if (s[0] || s[1]) return true;
    return false;
  }
};

/// Per-cell diagonal coupling and right-hand side contributed by wells.
struct WellCoupling {
  Vector diag;  // added to A's diagonal
  Vector rhs;   // added to the right-hand side

  bool couples() const {
    for (double d : diag)
      if (d != 0.0) return true;
    return false;
  }
};

/// Cell-centered pressure system after velocity elimination. The matrix is
/// symmetric positive semidefinite; for pure no-flow without wells the kernel
/// is the constant vector, attached as `nullspace`. `added_diag` records all
/// non-face diagonal contributions (Dirichlet closures, well couplings).
struct PressureSystem {
  CsrMatrix A;
  Vector rhs;
  std::optional<Vector> nullspace;
  Vector added_diag;
};

/// Assembles the two-point flux system. Face transmissibility is the harmonic
/// mean of the adjacent dimensionless conductances; when a per-cell mobility
/// is given each face gets the arithmetic mean of the adjacent mobilities.
PressureSystem assemble(const NormalizedField& nf, const GridHierarchy& g,
                        const BoundarySpec& bc, const Vector* sources = nullptr,
                        const WellCoupling* wells = nullptr,
                        const Vector* cell_mobility = nullptr);

/// Balanced corner/center source pattern: +q in each corner column, -4q in
/// the center column (cells in 2D). Sums to zero exactly.
Vector default_sources(const GridHierarchy& g, double q = 1.0);

/// Signed face rates in the normalized form: flux[e] = -T_e (p_plus - p_minus),
/// oriented toward the positive axis, aligned with internal_faces order.
struct FaceFluxField {
  Vector flux;
};

FaceFluxField recover_velocity(const GridHierarchy& g, const NormalizedField& nf,
                               const Vector& p, const Vector* cell_mobility = nullptr);

/// Max over cells of |net outflow - rhs|. The rhs passed here must be the
/// effective source at the solved pressure (well terms evaluated at p).
double check_conservation(const GridHierarchy& g, const FaceFluxField& v,
                          const Vector& rhs);

}  // namespace specmg
