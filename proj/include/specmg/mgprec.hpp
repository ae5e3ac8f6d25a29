#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "specmg/coarse.hpp"
#include "specmg/grid.hpp"
#include "specmg/linalg.hpp"

namespace specmg {

/// Damped block Jacobi over a fixed dof partition. Each sweep solves the
/// diagonal blocks of the level operator exactly:
///   e <- e + omega * D_B^{-1} (r - A e),   nu sweeps from e = 0.
/// The composite map r -> e is symmetric for symmetric A, so applying it
/// serves as both the pre- and post-smoother.
class BlockJacobiSmoother {
 public:
  BlockJacobiSmoother(const CsrMatrix& a, std::vector<std::vector<int>> blocks, int nu,
                      double omega);

  Vector apply(const CsrMatrix& a, const Vector& r) const;
  int sweeps() const { return nu_; }
  double damping() const { return omega_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

 private:
  std::vector<std::vector<int>> blocks_;
  std::vector<SparseCholesky> factors_;
  int nu_;
  double omega_;
};

/// Dense check of the smoother contract: M + M^T - A must be SPD, where M is
/// the implicit smoother matrix (the inverse of the composite sweep map).
/// Returns the smallest eigenvalue; positive means the contract holds.
double smoother_contract_margin(const BlockJacobiSmoother& s, const CsrMatrix& a);

enum class TgMode { Inexact, Exact };

/// The three-grid preconditioner. One application runs:
///   presmooth on the fine level, restrict the residual,
///   either solve the coarse level directly (exact mode) or run the inner
///   two-grid pass on it: coarse presmooth, restrict to the coarsest level,
///   solve there, prolong, coarse postsmooth (inexact mode),
///   prolong, postsmooth on the fine level.
/// The coarsest solve is a Cholesky factorization, or a deflated rank-one
/// shifted solve when the chain carries the constant kernel.
class ThreeGridPreconditioner {
 public:
  struct Options {
    int nu = 1;
    int nu_c = 1;
    double omega = 1.0;
    TgMode mode = TgMode::Inexact;
    /// The fine operator has the constant kernel (pure no-flow, no wells).
    /// The direct solves then deflate the transported constant.
    bool singular = false;
  };

  ThreeGridPreconditioner(const CsrMatrix& a, const GridHierarchy& g,
                          const CoarseSpace& wc, const CoarseSpace& wcc,
                          const Options& opt);

  Vector apply(const Vector& f) const;

  /// The inner two-grid operator on the coarse level (steps between the two
  /// fine-level smoothing passes in inexact mode).
  Vector apply_inner(const Vector& rc) const;

  /// Direct coarse-level solve used by exact mode.
  Vector solve_coarse(const Vector& rc) const;

  const CsrMatrix& a() const { return *a_; }
  const CsrMatrix& ac() const { return wc_->A_level; }
  const CsrMatrix& acc() const { return wcc_->A_level; }
  const CoarseSpace& wc() const { return *wc_; }
  const CoarseSpace& wcc() const { return *wcc_; }
  const BlockJacobiSmoother& fine_smoother() const { return *fine_smoother_; }
  const BlockJacobiSmoother& coarse_smoother() const { return *coarse_smoother_; }
  TgMode mode() const { return mode_; }
  int dim() const { return a_->nrows; }

 private:
  const CsrMatrix* a_;
  const CoarseSpace* wc_;
  const CoarseSpace* wcc_;
  CsrMatrix rc_t_, rcc_t_;
  std::unique_ptr<BlockJacobiSmoother> fine_smoother_;
  std::unique_ptr<BlockJacobiSmoother> coarse_smoother_;
  std::optional<SparseCholesky> coarsest_chol_;
  std::optional<DeflatedSolver> coarsest_defl_;
  std::optional<SparseCholesky> coarse_chol_;
  std::optional<DeflatedSolver> coarse_defl_;
  TgMode mode_;
};

}  // namespace specmg
