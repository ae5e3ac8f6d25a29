#include "specmg/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace specmg {

namespace {

// Extends a kept count over a degenerate tail so selection never splits an
// eigenvalue group (kept bases stay rotation-invariant).
int extend_over_ties(const Vector& eigs, int kept) {
  const int n = static_cast<int>(eigs.size());
  while (kept > 0 && kept < n) {
    const double a = eigs[kept - 1];
    const double b = eigs[kept];
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    if (std::abs(b - a) <= 1e-12 * scale)
      ++kept;
    else
      break;
  }
  return kept;
}

int kept_count(const SelectionRule& rule, const Vector& eigs, bool* saturated) {
  const int n = static_cast<int>(eigs.size());
  int kept;
  if (rule.kind == SelectionRule::Kind::FixedCount) {
    if (rule.count < 1) throw std::invalid_argument("SelectionRule: count must be >= 1");
    kept = std::min(rule.count, n);
    if (saturated) *saturated = false;
  } else {
    kept = select_by_threshold(eigs, rule.threshold, std::min(rule.cap, n), saturated);
  }
  return extend_over_ties(eigs, kept);
}

DenseMatrix dense_block(const CsrMatrix& a, const std::vector<int>& cells,
                        std::vector<int>& global_to_local) {
  const int m = static_cast<int>(cells.size());
  for (int l = 0; l < m; ++l) global_to_local[cells[l]] = l;
  DenseMatrix d(m, m);
  for (int l = 0; l < m; ++l) {
    const int r = cells[l];
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const int lc = global_to_local[a.col_idx[p]];
      if (lc >= 0) d(l, lc) = a.vals[p];
    }
  }
  for (int l = 0; l < m; ++l) global_to_local[cells[l]] = -1;
  return d;
}

}  // namespace

int select_by_threshold(const Vector& eigs_ascending, double threshold, int cap,
                        bool* saturated) {
  if (cap < 1) throw std::invalid_argument("select_by_threshold: cap must be >= 1");
  int count = 0;
  for (double e : eigs_ascending) {
    if (e < threshold)
      ++count;
    else
      break;
  }
  count = std::max(count, 1);
  const bool hit = count >= cap;
  if (saturated) *saturated = hit;
  return std::min(count, cap);
}

double BlockSpectralBasis::first_discarded() const {
  if (kept >= static_cast<int>(eigenvalues.size()))
    return std::numeric_limits<double>::infinity();
  return eigenvalues[kept];
}

double CoarseSpace::min_first_discarded() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::min(m, b.first_discarded());
  return m;
}

CsrMatrix mask_to_blocks(const CsrMatrix& a, const BlockMap& map,
                         const Vector* added_diag) {
  if (a.nrows != a.ncols) throw std::invalid_argument("mask_to_blocks: not square");
  std::vector<Triplet> entries;
  entries.reserve(a.col_idx.size());
  for (int r = 0; r < a.nrows; ++r) {
    const int br = map.block_of(r);
    double diag = added_diag ? (*added_diag)[r] : 0.0;
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const int c = a.col_idx[p];
      if (c == r) continue;
      if (map.block_of(c) != br) continue;
      entries.push_back({r, c, a.vals[p]});
      diag -= a.vals[p];
    }
    entries.push_back({r, r, diag});
  }
  CsrMatrix m = csr_from_triplets(a.nrows, a.ncols, std::move(entries));
  m.symmetric = true;
  return m;
}

CoarseSpace build_coarse_space_c(const CsrMatrix& a, const Vector* added_diag,
                                 const Vector& cell_weight, const GridHierarchy& g,
                                 const SelectionRule& rule) {
  const int n = g.num_cells();
  if (a.nrows != n || static_cast<int>(cell_weight.size()) != n)
    throw std::invalid_argument("build_coarse_space_c: size mismatch");
  const BlockMap cmap = make_block_map(g, Level::Coarse);
  const CsrMatrix masked = mask_to_blocks(a, cmap, added_diag);

  CoarseSpace cs;
  cs.level = Level::Coarse;
  cs.dof_offset.assign(1, 0);
  std::vector<Triplet> r_entries;
  std::vector<int> g2l(n, -1);

  for (int b = 0; b < cmap.num_blocks(); ++b) {
    const std::vector<int> cells = cmap.block_cells(b);
    const int m = static_cast<int>(cells.size());
    DenseMatrix local = dense_block(masked, cells, g2l);
    Vector s(m);
    for (int l = 0; l < m; ++l) s[l] = cell_weight[cells[l]];
    EigenDecomposition eig = dense_sym_eig(local, s);

    BlockSpectralBasis basis;
    basis.block = b;
    basis.eigenvalues = eig.eigenvalues;
    basis.kept = kept_count(rule, eig.eigenvalues, &basis.saturated);

    const int row0 = cs.dof_offset.back();
    for (int j = 0; j < basis.kept; ++j)
      for (int l = 0; l < m; ++l)
        r_entries.push_back({row0 + j, cells[l], eig.vectors(l, j)});
    cs.dof_offset.push_back(row0 + basis.kept);
    cs.blocks.push_back(std::move(basis));
  }

  cs.R = csr_from_triplets(cs.dof_offset.back(), n, std::move(r_entries));
  cs.A_level = galerkin_product(cs.R, a);
  if (!added_diag) cs.constant_rep = cs.R.apply(cell_weight);

  // coarse smoother partition: dofs of the coarse blocks inside each cc block
  cs.smoother_groups.assign(g.num_cc_blocks(), {});
  for (int b = 0; b < cmap.num_blocks(); ++b) {
    std::vector<int>& grp = cs.smoother_groups[cc_parent(g, b)];
    for (int d = cs.dof_offset[b]; d < cs.dof_offset[b + 1]; ++d) grp.push_back(d);
  }
  return cs;
}

CoarseSpace build_coarse_space_cc(const CsrMatrix& a, const Vector* added_diag,
                                  const Vector& cell_weight, const GridHierarchy& g,
                                  const CoarseSpace& wc, const SelectionRule& rule) {
  const int n = g.num_cells();
  if (a.nrows != n || wc.R.ncols != n)
    throw std::invalid_argument("build_coarse_space_cc: size mismatch");
  const BlockMap ccmap = make_block_map(g, Level::CoarseCoarse);
  const CsrMatrix masked = mask_to_blocks(a, ccmap, added_diag);

  // Projection of the cc-block-internal operator onto the level-c basis.
  // Disjoint block supports make it block-diagonal over cc blocks.
  const CsrMatrix proj = galerkin_product(wc.R, masked);

  // The projected weight must be the identity: level-c vectors are
  // weight-orthonormal within each block and blocks do not overlap.
  {
    std::vector<Triplet> wt;
    wt.reserve(n);
    for (int c = 0; c < n; ++c) wt.push_back({c, c, cell_weight[c]});
    CsrMatrix weight = csr_from_triplets(n, n, std::move(wt));
    weight.symmetric = true;
    const CsrMatrix gram = galerkin_product(wc.R, weight);
    for (int i = 0; i < gram.nrows; ++i)
      for (int p = gram.row_ptr[i]; p < gram.row_ptr[i + 1]; ++p) {
        const double want = (gram.col_idx[p] == i) ? 1.0 : 0.0;
        if (std::abs(gram.vals[p] - want) > 1e-10)
          throw std::runtime_error(
              "build_coarse_space_cc: level-c basis is not weight-orthonormal");
      }
  }

  CoarseSpace cs;
  cs.level = Level::CoarseCoarse;
  cs.dof_offset.assign(1, 0);
  std::vector<Triplet> r_entries;
  std::vector<int> g2l(wc.dim(), -1);

  for (int b = 0; b < ccmap.num_blocks(); ++b) {
    const std::vector<int>& dofs = wc.smoother_groups[b];
    DenseMatrix local = dense_block(proj, dofs, g2l);
    EigenDecomposition eig = dense_sym_eig(local);

    BlockSpectralBasis basis;
    basis.block = b;
    basis.eigenvalues = eig.eigenvalues;
    basis.kept = kept_count(rule, eig.eigenvalues, &basis.saturated);

    const int row0 = cs.dof_offset.back();
    const int m = static_cast<int>(dofs.size());
    for (int j = 0; j < basis.kept; ++j)
      for (int l = 0; l < m; ++l)
        r_entries.push_back({row0 + j, dofs[l], eig.vectors(l, j)});
    cs.dof_offset.push_back(row0 + basis.kept);
    cs.blocks.push_back(std::move(basis));
  }

  cs.R = csr_from_triplets(cs.dof_offset.back(), wc.dim(), std::move(r_entries));
  cs.A_level = galerkin_product(cs.R, wc.A_level);
  if (!wc.constant_rep.empty()) cs.constant_rep = cs.R.apply(wc.constant_rep);
  return cs;
}

void refresh_galerkin(CoarseSpace& cs, const CsrMatrix& a_prev) {
  cs.A_level = galerkin_product(cs.R, a_prev);
}

}  // namespace specmg
