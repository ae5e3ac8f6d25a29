#pragma once

#include <vector>

#include "specmg/grid.hpp"
#include "specmg/linalg.hpp"

namespace specmg {

/// How many local eigenpairs each block keeps: a fixed count, or every
/// eigenvalue below a threshold with a candidate cap.
struct SelectionRule {
  enum class Kind { FixedCount, Threshold };
  Kind kind = Kind::FixedCount;
  int count = 4;
  double threshold = 0.0;
  int cap = 20;

  static SelectionRule fixed(int l) { return {Kind::FixedCount, l, 0.0, 0}; }
  static SelectionRule by_threshold(double b, int cap = 20) {
    return {Kind::Threshold, 0, b, cap};
  }
};

/// Number of eigenvalues strictly below the threshold, clamped to [1, cap].
/// `saturated` reports a count that hit the cap.
int select_by_threshold(const Vector& eigs_ascending, double threshold, int cap,
                        bool* saturated = nullptr);

struct BlockSpectralBasis {
  int block = 0;
  Vector eigenvalues;  // full ascending spectrum of the local problem
  int kept = 0;
  bool saturated = false;

  /// First discarded eigenvalue; +inf when the whole local space is kept.
  double first_discarded() const;
};

/// One level of the nested spectral hierarchy: the restriction R from the
/// previous level, the Galerkin operator R A R^T, and per-block diagnostics.
struct CoarseSpace {
  Level level = Level::Coarse;
  CsrMatrix R;        // n_this x n_prev
  CsrMatrix A_level;  // R A_prev R^T
  std::vector<BlockSpectralBasis> blocks;
  std::vector<int> dof_offset;  // size blocks+1, dofs of block b are [off[b], off[b+1])

  /// Coefficients of the global constant in this basis; empty when the local
  /// problems were not pure Neumann.
  Vector constant_rep;

  /// For the coarse level: this-level dof sets grouped by cc block, the
  /// partition the coarse smoother uses.
  std::vector<std::vector<int>> smoother_groups;

  int dim() const { return R.nrows; }
  double min_first_discarded() const;
};

/// Keeps the off-diagonal entries of A whose endpoints share a block and
/// rebuilds block-local diagonals as negated off-diagonal row sums plus the
/// recorded non-face diagonal (when included). The per-block result is the
/// block-internal-face operator; summed over blocks it is dominated by A.
CsrMatrix mask_to_blocks(const CsrMatrix& a, const BlockMap& map,
                         const Vector* added_diag);

/// Level-c construction: per coarse block, the generalized eigenproblem of
/// the block-internal-face matrix against diag(cell_weight); the lowest
/// eigenvectors, stored weight-orthonormal, become rows of R.
CoarseSpace build_coarse_space_c(const CsrMatrix& a, const Vector* added_diag,
                                 const Vector& cell_weight, const GridHierarchy& g,
                                 const SelectionRule& rule);

/// Level-cc construction: per cc block, the cc-block-internal-face matrix
/// projected onto the level-c basis. The projected weight is the identity
/// (the level-c vectors are weight-normalized), checked to 1e-10, so the
/// local problem is a standard symmetric one.
CoarseSpace build_coarse_space_cc(const CsrMatrix& a, const Vector* added_diag,
                                  const Vector& cell_weight, const GridHierarchy& g,
                                  const CoarseSpace& wc, const SelectionRule& rule);

/// Recomputes the Galerkin product for a new operator, keeping the basis.
void refresh_galerkin(CoarseSpace& cs, const CsrMatrix& a_prev);

}  // namespace specmg
