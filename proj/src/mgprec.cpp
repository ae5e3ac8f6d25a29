#include "specmg/mgprec.hpp"

#include <stdexcept>

namespace specmg {

namespace {

CsrMatrix diagonal_block(const CsrMatrix& a, const std::vector<int>& dofs,
                         std::vector<int>& g2l) {
  const int m = static_cast<int>(dofs.size());
  for (int l = 0; l < m; ++l) g2l[dofs[l]] = l;
  std::vector<Triplet> entries;
  for (int l = 0; l < m; ++l) {
    const int r = dofs[l];
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const int lc = g2l[a.col_idx[p]];
      if (lc >= 0) entries.push_back({l, lc, a.vals[p]});
    }
  }
  for (int l = 0; l < m; ++l) g2l[dofs[l]] = -1;
  CsrMatrix b = csr_from_triplets(m, m, std::move(entries));
  b.symmetric = a.symmetric;
  return b;
}

}  // namespace

BlockJacobiSmoother::BlockJacobiSmoother(const CsrMatrix& a,
                                         std::vector<std::vector<int>> blocks, int nu,
                                         double omega)
    : blocks_(std::move(blocks)), nu_(nu), omega_(omega) {
  if (nu_ < 1) throw std::invalid_argument("BlockJacobiSmoother: nu must be >= 1");
  if (!(omega_ > 0.0)) throw std::invalid_argument("BlockJacobiSmoother: omega must be positive");
  std::vector<int> g2l(a.nrows, -1);
  std::vector<char> seen(a.nrows, 0);
  int covered = 0;
  for (const auto& blk : blocks_) {
    for (int d : blk) {
      if (d < 0 || d >= a.nrows || seen[d])
        throw std::invalid_argument("BlockJacobiSmoother: blocks must partition the dofs");
      seen[d] = 1;
      ++covered;
    }
    factors_.emplace_back(diagonal_block(a, blk, g2l));
  }
  if (covered != a.nrows)
    throw std::invalid_argument("BlockJacobiSmoother: blocks must cover all dofs");
}

Vector BlockJacobiSmoother::apply(const CsrMatrix& a, const Vector& r) const {
  Vector e(r.size(), 0.0);
  Vector resid = r;
  for (int s = 0; s < nu_; ++s) {
    if (s > 0) {
      resid = a.apply(e);
      for (size_t i = 0; i < resid.size(); ++i) resid[i] = r[i] - resid[i];
    }
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const std::vector<int>& blk = blocks_[b];
      Vector local(blk.size());
      for (size_t l = 0; l < blk.size(); ++l) local[l] = resid[blk[l]];
      // block solves stay cheap; skip the refinement pass of the factor
      const Vector z = factors_[b].solve(local, false);
      for (size_t l = 0; l < blk.size(); ++l) e[blk[l]] += omega_ * z[l];
    }
  }
  return e;
}

double smoother_contract_margin(const BlockJacobiSmoother& s, const CsrMatrix& a) {
  const int n = a.nrows;
  if (n > 4096)
    throw std::invalid_argument("smoother_contract_margin: dense check limited to n <= 4096");
  // Minv columns by application, then M = Minv^{-1} densely.
  DenseMatrix minv(n, n);
  Vector unit(n, 0.0);
  for (int j = 0; j < n; ++j) {
    unit[j] = 1.0;
    const Vector col = s.apply(a, unit);
    for (int i = 0; i < n; ++i) minv(i, j) = col[i];
    unit[j] = 0.0;
  }
  DenseCholesky inv(minv);  // composite sweep map is SPD for SPD blocks
  DenseMatrix m(n, n);
  {
    Vector e(n, 0.0);
    for (int j = 0; j < n; ++j) {
      e[j] = 1.0;
      const Vector col = inv.solve(e);
      for (int i = 0; i < n; ++i) m(i, j) = col[i];
      e[j] = 0.0;
    }
  }
  const DenseMatrix ad = to_dense(a);
  DenseMatrix probe(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = m(i, j) + m(j, i) - ad(i, j);
      probe(i, j) = 0.5 * (v + (m(j, i) + m(i, j) - ad(j, i)));
    }
  const EigenDecomposition eig = dense_sym_eig(probe);
  return eig.eigenvalues.front();
}

ThreeGridPreconditioner::ThreeGridPreconditioner(const CsrMatrix& a,
                                                 const GridHierarchy& g,
                                                 const CoarseSpace& wc,
                                                 const CoarseSpace& wcc,
                                                 const Options& opt)
    : a_(&a), wc_(&wc), wcc_(&wcc), mode_(opt.mode) {
  if (wc.R.ncols != a.nrows)
    throw std::invalid_argument("ThreeGridPreconditioner: coarse space does not match A");
  if (wcc.R.ncols != wc.dim())
    throw std::invalid_argument("ThreeGridPreconditioner: levels are not nested");
  rc_t_ = csr_transpose(wc.R);
  rcc_t_ = csr_transpose(wcc.R);

  const BlockMap cmap = make_block_map(g, Level::Coarse);
  std::vector<std::vector<int>> fine_blocks(cmap.num_blocks());
  for (int b = 0; b < cmap.num_blocks(); ++b) fine_blocks[b] = cmap.block_cells(b);
  fine_smoother_ = std::make_unique<BlockJacobiSmoother>(a, std::move(fine_blocks),
                                                         opt.nu, opt.omega);
  coarse_smoother_ = std::make_unique<BlockJacobiSmoother>(
      wc.A_level, wc.smoother_groups, opt.nu_c, opt.omega);

  if (opt.singular) {
    // the kernel rides down the hierarchy as the transported constant
    if (wc.constant_rep.empty() || wcc.constant_rep.empty())
      throw std::invalid_argument(
          "ThreeGridPreconditioner: singular system but the coarse chain does not "
          "carry the constant");
    if (mode_ == TgMode::Inexact)
      coarsest_defl_.emplace(wcc.A_level, wcc.constant_rep);
    else
      coarse_defl_.emplace(wc.A_level, wc.constant_rep);
  } else {
    if (mode_ == TgMode::Inexact)
      coarsest_chol_.emplace(wcc.A_level);
    else
      coarse_chol_.emplace(wc.A_level);
  }
}

Vector ThreeGridPreconditioner::solve_coarse(const Vector& rc) const {
  if (coarse_chol_) return coarse_chol_->solve(rc);
  return coarse_defl_->solve(rc);
}

Vector ThreeGridPreconditioner::apply_inner(const Vector& rc) const {
  const CsrMatrix& ac = wc_->A_level;
  // coarse presmooth
  Vector uc = coarse_smoother_->apply(ac, rc);
  // coarsest correction
  Vector t = ac.apply(uc);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rc[i] - t[i];
  const Vector rcc = wcc_->R.apply(t);
  const Vector ecc = coarsest_chol_ ? coarsest_chol_->solve(rcc) : coarsest_defl_->solve(rcc);
  axpy(1.0, rcc_t_.apply(ecc), uc);
  // coarse postsmooth (the smoother is symmetric)
  t = ac.apply(uc);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rc[i] - t[i];
  axpy(1.0, coarse_smoother_->apply(ac, t), uc);
  return uc;
}

Vector ThreeGridPreconditioner::apply(const Vector& f) const {
  if (static_cast<int>(f.size()) != a_->nrows)
    throw std::invalid_argument("ThreeGridPreconditioner::apply: size mismatch");
  // fine presmooth
  Vector u = fine_smoother_->apply(*a_, f);
  // coarse correction
  Vector t = a_->apply(u);
  for (size_t i = 0; i < t.size(); ++i) t[i] = f[i] - t[i];
  const Vector rc = wc_->R.apply(t);
  const Vector ec = (mode_ == TgMode::Exact) ? solve_coarse(rc) : apply_inner(rc);
  axpy(1.0, rc_t_.apply(ec), u);
  // fine postsmooth
  t = a_->apply(u);
  for (size_t i = 0; i < t.size(); ++i) t[i] = f[i] - t[i];
  axpy(1.0, fine_smoother_->apply(*a_, t), u);
  return u;
}

}  // namespace specmg
