#pragma once

// Independent reference implementations the unit and acceptance tests check
// the library against. Everything here recomputes results from first
// principles (entrywise bilinear-form assembly, explicit dense inverse
// formulas, closed-form spectra) through code paths that share nothing with
// the library routines under test beyond basic dense algebra.

#include <cstdint>
#include <functional>

#include "specmg/field.hpp"
#include "specmg/grid.hpp"
#include "specmg/linalg.hpp"
#include "specmg/mgprec.hpp"
#include "specmg/tpfa.hpp"

namespace specmg::testing {

/// Entrywise assembly of the pressure bilinear form: for every pair of
/// interacting cells, accumulate the face term with its own normalization
/// and harmonic mean (coded as 2ab/(a+b), not 2/(1/a+1/b)). Dirichlet sides
/// add the half-cell closure to the diagonal. Optional per-cell mobility
/// multiplies each face by the arithmetic mean of the adjacent values.
DenseMatrix oracle_assemble_dense(const GridHierarchy& g, const PermeabilityField& f,
                                  const BoundarySpec& bc, const Vector* mobility = nullptr);

/// Column-by-column densification of a linear operator.
DenseMatrix dense_columns(int n, const std::function<Vector(const Vector&)>& op);

/// Spectral pseudo-inverse: eigenvalues at or below rel_cutoff * lambda_max
/// are dropped. Equals the inverse for definite input.
DenseMatrix oracle_pseudo_inverse(const DenseMatrix& a, double rel_cutoff = 1e-12);

/// The closed-form symmetric two-grid inverse
///   2S - S A S + (I - S A) R^T C R (I - A S),
/// where S is the (symmetric) smoother application matrix and C the coarse
/// solve. Feeding the coarse-level version of itself as C gives the
/// three-grid formula.
DenseMatrix oracle_two_grid_inverse(const DenseMatrix& s, const DenseMatrix& a,
                                    const DenseMatrix& r, const DenseMatrix& coarse_inv);

/// max |x - y| entrywise; matrices must have equal shape.
double max_abs_diff(const DenseMatrix& x, const DenseMatrix& y);

/// Per-axis independent log-uniform permeability (a genuinely orthotropic
/// sample, unlike the library's isotropic generator), plus uniform porosity.
PermeabilityField random_orthotropic(const GridHierarchy& g, std::uint64_t seed,
                                     double log10_span);

/// Closed-form generalized eigenvalues of a uniform-permeability box block
/// against the trace weight: tensor sums of the 1D Neumann chain values
/// 2(1 - cos(pi k / n)) divided by the space dimension, ascending.
Vector uniform_block_eigenvalues(int nx, int ny, int nz, int dim);

}  // namespace specmg::testing
