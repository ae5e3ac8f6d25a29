#include "specmg/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace specmg {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector apply_prec(const PrecApply& prec, const Vector& r) {
  return prec ? prec(r) : r;
}

Spectrum lanczos_from_cg(const std::vector<double>& alphas,
                         const std::vector<double>& betas) {
  const int m = static_cast<int>(alphas.size());
  DenseMatrix t(m, m);
  for (int k = 0; k < m; ++k) {
    t(k, k) = 1.0 / alphas[k];
    if (k > 0) t(k, k) += betas[k - 1] / alphas[k - 1];
    if (k + 1 < m) {
      const double off = std::sqrt(std::max(betas[k], 0.0)) / alphas[k];
      t(k, k + 1) = off;
      t(k + 1, k) = off;
    }
  }
  const EigenDecomposition eig = dense_sym_eig(t);
  return {eig.eigenvalues.front(), eig.eigenvalues.back()};
}

}  // namespace

SolveReport pcg(const CsrMatrix& a, const PrecApply& prec, const Vector& b, Vector& x,
                const SolverConfig& cfg, const Vector* nullspace) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = a.nrows;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("pcg: size mismatch");
  if (x.empty()) x.assign(n, 0.0);

  SolveReport rep;
  const double bnorm = nrm2(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    rep.converged = true;
    rep.relres = {0.0};
    rep.solve_seconds = seconds_since(t0);
    return rep;
  }

  auto project = [&](Vector& v) {
    if (nullspace) project_out(v, *nullspace);
  };

  project(x);
  Vector r = a.apply(x);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  project(r);
  rep.relres.push_back(nrm2(r) / bnorm);
  if (rep.relres.back() <= cfg.rtol) {
    // warm start already inside the tolerance
    rep.converged = true;
    rep.solve_seconds = seconds_since(t0);
    return rep;
  }

  Vector z = apply_prec(prec, r);
  project(z);
  Vector p = z;
  double rz = dot(r, z);

  std::vector<double> alphas, betas;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Vector ap = a.apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw IndefiniteOperator("pcg: p^T A p = " + std::to_string(pap) +
                               " at iteration " + std::to_string(it));
    const double alpha = rz / pap;
    alphas.push_back(alpha);
    axpy(alpha, p, x);
    project(x);
    axpy(-alpha, ap, r);
    project(r);
    rep.iterations = it;
    const double rel = nrm2(r) / bnorm;
    rep.relres.push_back(rel);
    if (rel <= cfg.rtol) {
      rep.converged = true;
      break;
    }
    z = apply_prec(prec, r);
    project(z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    betas.push_back(beta);
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  if (cfg.estimate_spectrum && !alphas.empty())
    rep.spectrum = lanczos_from_cg(alphas, betas);
  rep.solve_seconds = seconds_since(t0);
  return rep;
}

SolveReport gmres(const CsrMatrix& a, const PrecApply& prec, const Vector& b, Vector& x,
                  const SolverConfig& cfg, const Vector* nullspace) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = a.nrows;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("gmres: size mismatch");
  if (x.empty()) x.assign(n, 0.0);
  const int m = std::max(1, cfg.restart);

  SolveReport rep;
  const double bnorm = nrm2(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    rep.converged = true;
    rep.relres = {0.0};
    rep.solve_seconds = seconds_since(t0);
    return rep;
  }

  auto project = [&](Vector& v) {
    if (nullspace) project_out(v, *nullspace);
  };
  project(x);

  std::vector<Vector> v(m + 1, Vector(n));
  DenseMatrix h(m + 1, m);
  Vector cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);

  bool first = true;
  while (rep.iterations < cfg.max_iters) {
    Vector r = a.apply(x);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    project(r);
    const double beta = nrm2(r);
    const double rel0 = beta / bnorm;
    if (first) {
      rep.relres.push_back(rel0);
      first = false;
    }
    if (rel0 <= cfg.rtol) {
      rep.converged = true;
      break;
    }
    v[0] = r;
    scale(v[0], 1.0 / beta);
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int j = 0;
    bool happy = false;
    for (; j < m && rep.iterations < cfg.max_iters; ++j) {
      Vector zj = apply_prec(prec, v[j]);
      project(zj);
      Vector w = a.apply(zj);
      project(w);
      for (int i = 0; i <= j; ++i) {
        h(i, j) = dot(w, v[i]);
        axpy(-h(i, j), v[i], w);
      }
      h(j + 1, j) = nrm2(w);
      if (h(j + 1, j) > 0.0) {
        v[j + 1] = w;
        scale(v[j + 1], 1.0 / h(j + 1, j));
      } else {
        happy = true;  // exact Krylov breakdown: solution lies in the current space
      }
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      const double rel = std::abs(g[j + 1]) / bnorm;
      rep.relres.push_back(rel);
      if (rel <= cfg.rtol || happy) {
        ++j;
        break;
      }
    }

    // y from the triangular least squares, then x += P^{-1} (V y)
    Vector y(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h(i, k) * y[k];
      y[i] = s / h(i, i);
    }
    Vector u(n, 0.0);
    for (int i = 0; i < j; ++i) axpy(y[i], v[i], u);
    Vector cu = apply_prec(prec, u);
    project(cu);
    axpy(1.0, cu, x);
    project(x);

    Vector check = a.apply(x);
    for (int i = 0; i < n; ++i) check[i] = b[i] - check[i];
    project(check);
    if (nrm2(check) / bnorm <= cfg.rtol) {
      rep.converged = true;
      rep.relres.back() = nrm2(check) / bnorm;
      break;
    }
  }
  rep.solve_seconds = seconds_since(t0);
  return rep;
}

namespace {

DenseMatrix assemble_dense(int n, const std::function<Vector(const Vector&)>& op) {
  DenseMatrix d(n, n);
  Vector unit(n, 0.0);
  for (int j = 0; j < n; ++j) {
    unit[j] = 1.0;
    const Vector col = op(unit);
    for (int i = 0; i < n; ++i) d(i, j) = col[i];
    unit[j] = 0.0;
  }
  return d;
}

DenseMatrix symmetrized_half(const DenseMatrix& sym_psd) {
  // X = U diag(sqrt(lambda)) U^T of a symmetric PSD matrix
  DenseMatrix s = sym_psd;
  for (int i = 0; i < s.rows(); ++i)
    for (int j = i + 1; j < s.cols(); ++j) {
      const double v = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  EigenDecomposition eig = dense_sym_eig(s);
  const int n = s.rows();
  DenseMatrix x(n, n);
  for (int k = 0; k < n; ++k) {
    const double r = std::sqrt(std::max(eig.eigenvalues[k], 0.0));
    for (int i = 0; i < n; ++i) {
      const double c = r * eig.vectors(i, k);
      for (int j = 0; j <= i; ++j) x(i, j) += c * eig.vectors(j, k);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) x(i, j) = x(j, i);
  return x;
}

}  // namespace

Spectrum estimate_condition_dense(const CsrMatrix& a, const PrecApply& prec,
                                  bool deflate) {
  const int n = a.nrows;
  if (n > 4096)
    throw std::invalid_argument("estimate_condition_dense: limited to n <= 4096");
  const DenseMatrix ad = to_dense(a);
  const DenseMatrix pinv =
      assemble_dense(n, [&](const Vector& v) { return apply_prec(prec, v); });
  const DenseMatrix x = symmetrized_half(pinv);
  DenseMatrix s = matmul(matmul(x, ad), x);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  const EigenDecomposition eig = dense_sym_eig(s);
  int lo = 0;
  if (deflate) {
    const double cutoff = 1e-12 * std::max(std::abs(eig.eigenvalues.back()), 1e-300);
    while (lo < n - 1 && std::abs(eig.eigenvalues[lo]) <= cutoff) ++lo;
  }
  return {eig.eigenvalues[lo], eig.eigenvalues.back()};
}

Spectrum estimate_condition_lanczos(const CsrMatrix& a, const PrecApply& prec,
                                    const Vector* nullspace, int iters) {
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector b(a.nrows);
  for (double& v : b) v = u(rng);
  if (nullspace) project_out(b, *nullspace);
  SolverConfig cfg;
  cfg.rtol = 1e-14;
  cfg.max_iters = iters;
  cfg.estimate_spectrum = true;
  Vector x;
  const SolveReport rep = pcg(a, prec, b, x, cfg, nullspace);
  return rep.spectrum.value_or(Spectrum{});
}

double TheoryReport::tg_cond_bound() const {
  return std::max(overlap_constant * c_star / c_lambda, 1.0);
}

double TheoryReport::itg_cond_bound() const {
  return std::max(overlap_constant * c_star * lmax_mt_coarse / (c_lambda * c_c_lambda),
                  1.0);
}

double TheoryReport::sandwich_upper() const { return lmax_tg * std::max(lmax_inner, 1.0); }
double TheoryReport::sandwich_lower() const { return lmin_tg * std::min(lmin_inner, 1.0); }

namespace {

// M and Mtilde = M^T (M + M^T - A)^{-1} M for the implicit smoother matrix,
// assembled densely from smoother applications.
struct SmootherAlgebra {
  DenseMatrix m;       // implicit smoother matrix
  DenseMatrix mtilde;
  double contract_margin;
};

SmootherAlgebra smoother_algebra(const BlockJacobiSmoother& s, const CsrMatrix& a) {
  const int n = a.nrows;
  const DenseMatrix minv =
      assemble_dense(n, [&](const Vector& v) { return s.apply(a, v); });
  DenseCholesky minv_chol(minv);
  DenseMatrix m = assemble_dense(n, [&](const Vector& v) { return minv_chol.solve(v); });
  // exact symmetry for downstream eigensolves
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  const DenseMatrix ad = to_dense(a);
  DenseMatrix probe(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) probe(i, j) = 2.0 * m(i, j) - ad(i, j);
  const EigenDecomposition eig = dense_sym_eig(probe);
  const double margin = eig.eigenvalues.front();
  if (!(margin > 0.0))
    throw std::runtime_error("verify_theory: smoother contract violated, margin = " +
                             std::to_string(margin));
  DenseCholesky probe_chol(probe);
  const DenseMatrix inv_probe =
      assemble_dense(n, [&](const Vector& v) { return probe_chol.solve(v); });
  DenseMatrix mtilde = matmul(matmul(m, inv_probe), m);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (mtilde(i, j) + mtilde(j, i));
      mtilde(i, j) = v;
      mtilde(j, i) = v;
    }
  return {std::move(m), std::move(mtilde), margin};
}

DenseMatrix dense_inverse_spd(const DenseMatrix& a) {
  DenseCholesky chol(a);
  const int n = a.rows();
  return assemble_dense(n, [&](const Vector& v) { return chol.solve(v); });
}

}  // namespace

TheoryReport verify_theory(const CsrMatrix& a, const GridHierarchy& g,
                           const CoarseSpace& wc, const CoarseSpace& wcc,
                           const ThreeGridPreconditioner::Options& opt) {
  const int n = a.nrows;
  if (n > 4096) throw std::invalid_argument("verify_theory: limited to n <= 4096");

  ThreeGridPreconditioner::Options exact_opt = opt;
  exact_opt.mode = TgMode::Exact;
  ThreeGridPreconditioner::Options inexact_opt = opt;
  inexact_opt.mode = TgMode::Inexact;
  const ThreeGridPreconditioner p_tg(a, g, wc, wcc, exact_opt);
  const ThreeGridPreconditioner p_itg(a, g, wc, wcc, inexact_opt);

  TheoryReport rep;

  // measured spectra of the preconditioned operators
  {
    const Spectrum s =
        estimate_condition_dense(a, [&](const Vector& v) { return p_tg.apply(v); });
    rep.lmin_tg = s.lambda_min;
    rep.lmax_tg = s.lambda_max;
  }
  {
    const Spectrum s =
        estimate_condition_dense(a, [&](const Vector& v) { return p_itg.apply(v); });
    rep.lmin_itg = s.lambda_min;
    rep.lmax_itg = s.lambda_max;
  }
  {
    const Spectrum s = estimate_condition_dense(
        wc.A_level, [&](const Vector& v) { return p_itg.apply_inner(v); });
    rep.lmin_inner = s.lambda_min;
    rep.lmax_inner = s.lambda_max;
  }

  const SmootherAlgebra fine = smoother_algebra(p_tg.fine_smoother(), a);
  const SmootherAlgebra coarse = smoother_algebra(p_tg.coarse_smoother(), wc.A_level);
  rep.contract_margin_fine = fine.contract_margin;
  rep.contract_margin_coarse = coarse.contract_margin;

  const DenseMatrix ad = to_dense(a);

  // c_star: largest eigenvalue of Mtilde against A
  rep.c_star = dense_sym_eig_spd_b(fine.mtilde, ad).eigenvalues.back();

  // min-max identity, brute force: Q = Mt - Mt R^T (R Mt R^T)^{-1} R Mt
  {
    const DenseMatrix rt = to_dense(csr_transpose(wc.R));
    const DenseMatrix r = to_dense(wc.R);
    const DenseMatrix rmt = matmul(r, fine.mtilde);
    const DenseMatrix rmtrt = matmul(rmt, rt);
    const DenseMatrix inv = dense_inverse_spd(rmtrt);
    const DenseMatrix corr = matmul(matmul(rmt.transposed(), inv), rmt);
    DenseMatrix q = add(fine.mtilde, corr, -1.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = 0.5 * (q(i, j) + q(j, i));
        q(i, j) = v;
        q(j, i) = v;
      }
    rep.xz_rhs = dense_sym_eig_spd_b(q, ad).eigenvalues.back();
    rep.xz_lhs = 1.0 / rep.lmin_tg;
  }

  rep.c_lambda = wc.min_first_discarded();
  rep.c_c_lambda = wcc.min_first_discarded();
  rep.lmax_mt_coarse = dense_sym_eig(coarse.mtilde).eigenvalues.back();

  return rep;
}

}  // namespace specmg
