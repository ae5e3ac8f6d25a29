#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "specmg/linalg.hpp"
#include "specmg/mgprec.hpp"

namespace specmg {

/// Preconditioner application r -> P^{-1} r. Identity when empty.
using PrecApply = std::function<Vector(const Vector&)>;

struct SolverConfig {
  enum class Method { CG, GMRES };
  Method method = Method::CG;
  double rtol = 1e-6;
  int max_iters = 1000;
  int restart = 30;            // GMRES only
  bool estimate_spectrum = false;  // CG only: Lanczos values from the cg coefficients
};

struct Spectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond() const { return lambda_max / lambda_min; }
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> relres;  // per-iteration ||b - A x|| / ||b||, [0] is the start
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  std::optional<Spectrum> spectrum;
};

/// Thrown when the operator turns out not to be SPD inside CG.
struct IndefiniteOperator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solve that had to succeed did not (non-convergence or breakdown).
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Preconditioned conjugate gradients. When a nullspace direction is given
/// the right-hand side, the iterates and the preconditioned residuals are
/// kept orthogonal to it, which pins the zero-mean representative.
SolveReport pcg(const CsrMatrix& a, const PrecApply& prec, const Vector& b, Vector& x,
                const SolverConfig& cfg, const Vector* nullspace = nullptr);

/// Restarted GMRES, right-preconditioned, modified Gram-Schmidt.
SolveReport gmres(const CsrMatrix& a, const PrecApply& prec, const Vector& b, Vector& x,
                  const SolverConfig& cfg, const Vector* nullspace = nullptr);

/// Spectrum of P^{-1} A through the symmetrized operator
/// (P^{-1})^{1/2} A (P^{-1})^{1/2}, assembled densely (n <= 4096). With
/// `deflate` the near-null eigenvalue of a semidefinite A is dropped.
Spectrum estimate_condition_dense(const CsrMatrix& a, const PrecApply& prec,
                                  bool deflate = false);

/// Lanczos estimate from a CG run on a seeded random right-hand side.
Spectrum estimate_condition_lanczos(const CsrMatrix& a, const PrecApply& prec,
                                    const Vector* nullspace = nullptr, int iters = 200);

/// Dense verification of the two-grid theory on one SPD instance. Everything
/// is measured with dense spectral decompositions; sizes are capped at 4096.
struct TheoryReport {
  // smoother contracts (smallest eigenvalue of M + M^T - A per level)
  double contract_margin_fine = 0.0;
  double contract_margin_coarse = 0.0;

  // measured spectra
  double lmin_tg = 0.0, lmax_tg = 0.0;    // exact two-grid P^{-1} A
  double lmin_itg = 0.0, lmax_itg = 0.0;  // inexact three-grid P^{-1} A
  double lmin_inner = 0.0, lmax_inner = 0.0;  // inner operator against A_c

  // the min-max identity: 1 / lmin_tg against the brute-force right side
  double xz_lhs = 0.0, xz_rhs = 0.0;

  // stability constants
  double c_star = 0.0;        // smallest C with Mtilde <= C A
  double c_lambda = 0.0;      // min over blocks of the first discarded level-c eigenvalue
  double c_c_lambda = 0.0;    // same at level cc
  double lmax_mt_coarse = 0.0;

  // bounds
  double overlap_constant = 8.0;
  double tg_cond_bound() const;      // max(overlap * c_star / c_lambda, 1)
  double itg_cond_bound() const;     // with the coarse-level factors folded in
  double tg_cond() const { return lmax_tg / lmin_tg; }
  double itg_cond() const { return lmax_itg / lmin_itg; }

  // sandwich of the three-grid spectrum by the two-grid one
  double sandwich_upper() const;  // lmax_tg * max(lmax_inner, 1)
  double sandwich_lower() const;  // lmin_tg * min(lmin_inner, 1)
};

TheoryReport verify_theory(const CsrMatrix& a, const GridHierarchy& g,
                           const CoarseSpace& wc, const CoarseSpace& wcc,
                           const ThreeGridPreconditioner::Options& opt);

}  // namespace specmg
