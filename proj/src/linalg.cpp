#include "specmg/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>

namespace specmg {

// ---------------------------------------------------------------- vectors

double dot(const Vector& a, const Vector& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double nrm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double nrm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double alpha, const Vector& x, Vector& y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(Vector& v, double alpha) {
  for (double& x : v) x *= alpha;
}

void project_out(Vector& v, const Vector& dir) {
  const double c = dot(v, dir);
  axpy(-c, dir, v);
}

Vector constant_vector(int n, double value) { return Vector(static_cast<size_t>(n), value); }

Vector unit_constant(int n) {
  return constant_vector(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

// ----------------------------------------------------------- dense matrix

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector matvec(const DenseMatrix& a, const Vector& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw std::invalid_argument("matvec: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + beta * b(i, j);
  return c;
}

double symmetry_defect(const DenseMatrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

// ---------------------------------------------------------- sparse matrix

Vector CsrMatrix::apply(const Vector& x) const {
  if (static_cast<int>(x.size()) != ncols)
    throw std::invalid_argument("CsrMatrix::apply: dimension mismatch");
  Vector y(nrows, 0.0);
  for (int i = 0; i < nrows; ++i) {
    double s = 0.0;
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += vals[p] * x[col_idx[p]];
    y[i] = s;
  }
  return y;
}

double CsrMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < nrows; ++i)
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      if (col_idx[p] == i) t += vals[p];
  return t;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : vals) m = std::max(m, std::abs(v));
  return m;
}

Vector spmv(const CsrMatrix& a, const Vector& x) { return a.apply(x); }

CsrMatrix csr_from_triplets(int nrows, int ncols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries)
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
      throw std::invalid_argument("csr_from_triplets: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.row_ptr.assign(nrows + 1, 0);
  size_t i = 0;
  while (i < entries.size()) {
    size_t j = i;
    double s = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      s += entries[j].val;
      ++j;
    }
    m.col_idx.push_back(entries[i].col);
    m.vals.push_back(s);
    ++m.row_ptr[entries[i].row + 1];
    i = j;
  }
  for (int r = 0; r < nrows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix csr_identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  CsrMatrix m = csr_from_triplets(n, n, std::move(t));
  m.symmetric = true;
  return m;
}

CsrMatrix csr_transpose(const CsrMatrix& a) {
  CsrMatrix t;
  t.nrows = a.ncols;
  t.ncols = a.nrows;
  t.row_ptr.assign(t.nrows + 1, 0);
  for (int c : a.col_idx) ++t.row_ptr[c + 1];
  for (int r = 0; r < t.nrows; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
  t.col_idx.resize(a.col_idx.size());
  t.vals.resize(a.vals.size());
  std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int i = 0; i < a.nrows; ++i)
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const int q = next[a.col_idx[p]]++;
      t.col_idx[q] = i;
      t.vals[q] = a.vals[p];
    }
  t.symmetric = a.symmetric;
  return t;
}

CsrMatrix csr_multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.ncols != b.nrows) throw std::invalid_argument("csr_multiply: shape mismatch");
  CsrMatrix c;
  c.nrows = a.nrows;
  c.ncols = b.ncols;
  c.row_ptr.assign(a.nrows + 1, 0);
  std::vector<double> acc(b.ncols, 0.0);
  std::vector<int> marker(b.ncols, -1);
  std::vector<int> cols;
  for (int i = 0; i < a.nrows; ++i) {
    cols.clear();
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const int k = a.col_idx[p];
      const double av = a.vals[p];
      for (int q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
        const int j = b.col_idx[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          cols.push_back(j);
        }
        acc[j] += av * b.vals[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (int j : cols) {
      c.col_idx.push_back(j);
      c.vals.push_back(acc[j]);
    }
    c.row_ptr[i + 1] = static_cast<int>(c.col_idx.size());
  }
  return c;
}

CsrMatrix csr_symmetrize(const CsrMatrix& a) {
  if (a.nrows != a.ncols) throw std::invalid_argument("csr_symmetrize: not square");
  const CsrMatrix t = csr_transpose(a);
  std::vector<Triplet> entries;
  entries.reserve(2 * a.col_idx.size());
  for (int i = 0; i < a.nrows; ++i)
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      entries.push_back({i, a.col_idx[p], 0.5 * a.vals[p]});
  for (int i = 0; i < t.nrows; ++i)
    for (int p = t.row_ptr[i]; p < t.row_ptr[i + 1]; ++p)
      entries.push_back({i, t.col_idx[p], 0.5 * t.vals[p]});
  CsrMatrix s = csr_from_triplets(a.nrows, a.ncols, std::move(entries));
  s.symmetric = true;
  return s;
}

CsrMatrix galerkin_product(const CsrMatrix& r, const CsrMatrix& a) {
  const CsrMatrix ra = csr_multiply(r, a);
  const CsrMatrix rart = csr_multiply(ra, csr_transpose(r));
  return csr_symmetrize(rart);
}

DenseMatrix to_dense(const CsrMatrix& a) {
  DenseMatrix d(a.nrows, a.ncols);
  for (int i = 0; i < a.nrows; ++i)
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) d(i, a.col_idx[p]) = a.vals[p];
  return d;
}

bool stored_symmetric(const CsrMatrix& a) {
  if (a.nrows != a.ncols) return false;
  const CsrMatrix t = csr_transpose(a);
  // transpose of CSR with sorted rows is CSR with sorted rows, so direct compare
  for (int i = 0; i <= a.nrows; ++i)
    if (a.row_ptr[i] != t.row_ptr[i]) return false;
  for (size_t p = 0; p < a.col_idx.size(); ++p)
    if (a.col_idx[p] != t.col_idx[p] || a.vals[p] != t.vals[p]) return false;
  return true;
}

// ------------------------------------------------------------ eigensolver

namespace {

// Householder reduction of z to tridiagonal form (d, e) with the orthogonal
// transform accumulated in z.
void householder_tridiag(DenseMatrix& z, Vector& d, Vector& e) {
  const int n = z.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i > 0; --i) {
    const int l = i - 1;
    double h = 0.0;
    double sc = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) sc += std::abs(z(i, k));
      if (sc == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= sc;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = sc * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[j] = g / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + g * z(i, k);
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i;
    if (d[i] != 0.0) {
      for (int j = 0; j < l; ++j) {
        double g = 0.0;
        for (int k = 0; k < l; ++k) g += z(i, k) * z(k, j);
        for (int k = 0; k < l; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j < l; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }
}

// Implicit-shift QL on the tridiagonal (d, e), rotations applied to z columns.
void tridiag_ql(Vector& d, Vector& e, DenseMatrix& z) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  // The relative deflation test below cannot split clusters of eigenvalues
  // that sit at the round-off floor of a matrix with O(1) norm: there both
  // d[m] and e[m] are noise of size eps*||T||, so |e[m]| <= eps*(|d[m]|+
  // |d[m+1]|) never holds and the sweep stalls. After a sweep budget has
  // been spent on one eigenvalue, additionally deflate off-diagonals that
  // are negligible against the whole tridiagonal; zeroing such an entry is
  // a backward perturbation of size eps*||T||, the same as one QL sweep.
  double anorm = 0.0;
  for (int k = 0; k < n; ++k) anorm = std::max({anorm, std::abs(d[k]), std::abs(e[k])});
  const double floor_abs = eps * anorm;
  constexpr int kRescueSweeps = 30;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
        if (iter >= kRescueSweeps && std::abs(e[m]) <= floor_abs) break;
      }
      if (m != l) {
        if (iter++ == 100) throw std::runtime_error("dense_sym_eig: QL did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

void sort_pairs_ascending(Vector& d, DenseMatrix& z) {
  const int n = static_cast<int>(d.size());
  for (int i = 0; i < n - 1; ++i) {
    int k = i;
    for (int j = i + 1; j < n; ++j)
      if (d[j] < d[k]) k = j;
    if (k != i) {
      std::swap(d[i], d[k]);
      for (int r = 0; r < n; ++r) {
        const double t = z(r, i);
        z(r, i) = z(r, k);
        z(r, k) = t;
      }
    }
  }
}

// Deterministic sign: the entry of largest magnitude is made positive.
void canonical_signs(DenseMatrix& z) {
  for (int j = 0; j < z.cols(); ++j) {
    int k = 0;
    for (int i = 1; i < z.rows(); ++i)
      if (std::abs(z(i, j)) > std::abs(z(k, j))) k = i;
    if (z(k, j) < 0.0)
      for (int i = 0; i < z.rows(); ++i) z(i, j) = -z(i, j);
  }
}

void require_symmetric(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("dense_sym_eig: not square");
  const double defect = symmetry_defect(a);
  if (defect > 1e-12 * std::max(1e-300, a.max_abs()))
    throw std::invalid_argument("dense_sym_eig: matrix not symmetric");
}

EigenDecomposition standard_sym_eig(DenseMatrix a) {
  Vector d, e;
  householder_tridiag(a, d, e);
  tridiag_ql(d, e, a);
  sort_pairs_ascending(d, a);
  canonical_signs(a);
  return {std::move(d), std::move(a)};
}

}  // namespace

EigenDecomposition dense_sym_eig(const DenseMatrix& a, const Vector& b_diag) {
  require_symmetric(a);
  const int n = a.rows();
  if (static_cast<int>(b_diag.size()) != n)
    throw std::invalid_argument("dense_sym_eig: weight size mismatch");
  Vector s(n);
  for (int i = 0; i < n; ++i) {
    if (!(b_diag[i] > 0.0))
      throw std::invalid_argument("dense_sym_eig: non-positive weight entry");
    s[i] = 1.0 / std::sqrt(b_diag[i]);
  }
  DenseMatrix at(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(i, j) = a(i, j) * s[i] * s[j];
  // exact symmetry of the scaled matrix, products commute entrywise
  EigenDecomposition eig = standard_sym_eig(std::move(at));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) eig.vectors(i, j) *= s[i];
  return eig;
}

EigenDecomposition dense_sym_eig(const DenseMatrix& a) {
  require_symmetric(a);
  return standard_sym_eig(a);
}

EigenDecomposition dense_sym_eig_spd_b(const DenseMatrix& a, const DenseMatrix& b) {
  require_symmetric(a);
  const int n = a.rows();
  if (b.rows() != n || b.cols() != n)
    throw std::invalid_argument("dense_sym_eig_spd_b: shape mismatch");
  DenseCholesky chol(b);
  // At = L^{-1} A L^{-T}: solve L X = A columnwise, then L Y = X^T.
  DenseMatrix x(n, n);
  {
    Vector col(n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) col[i] = a(i, j);
      Vector y = chol.forward(col);
      for (int i = 0; i < n; ++i) x(i, j) = y[i];
    }
  }
  DenseMatrix at(n, n);
  {
    Vector col(n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) col[i] = x(j, i);
      Vector y = chol.forward(col);
      for (int i = 0; i < n; ++i) at(i, j) = y[i];
    }
  }
  // enforce exact symmetry lost to rounding in the two triangular passes
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (at(i, j) + at(j, i));
      at(i, j) = v;
      at(j, i) = v;
    }
  EigenDecomposition eig = standard_sym_eig(std::move(at));
  Vector col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = eig.vectors(i, j);
    Vector w = chol.backward(col);
    for (int i = 0; i < n; ++i) eig.vectors(i, j) = w[i];
  }
  canonical_signs(eig.vectors);
  return eig;
}

// --------------------------------------------------------------- Cholesky

SparseCholesky::SparseCholesky(const CsrMatrix& a) : n_(a.nrows), a_(a) {
  if (a.nrows != a.ncols) throw std::invalid_argument("SparseCholesky: not square");
  if (!a.symmetric && !stored_symmetric(a))
    throw std::invalid_argument("SparseCholesky: matrix not symmetric");
  const int n = n_;

  // elimination tree over the upper-triangular pattern
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int k = 0; k < n; ++k) {
    for (int p = a.row_ptr[k]; p < a.row_ptr[k + 1]; ++p) {
      int i = a.col_idx[p];
      while (i != -1 && i < k) {
        const int nxt = ancestor[i];
        ancestor[i] = k;
        if (nxt == -1) parent[i] = k;
        i = nxt;
      }
    }
  }

  // reach of row k = columns j < k with L(k,j) != 0, found by walking the tree
  std::vector<int> mark(n, -1), stack(n);
  auto row_reach = [&](int k, std::vector<int>& out) {
    out.clear();
    mark[k] = k;
    for (int p = a.row_ptr[k]; p < a.row_ptr[k + 1]; ++p) {
      int i = a.col_idx[p];
      if (i >= k) continue;
      int len = 0;
      while (mark[i] != k) {
        stack[len++] = i;
        mark[i] = k;
        i = parent[i];
      }
      for (int q = 0; q < len; ++q) out.push_back(stack[q]);
    }
    std::sort(out.begin(), out.end());  // ascending is a topological order here
  };

  std::vector<int> count(n, 1);  // diagonal included
  std::vector<int> reach;
  for (int k = 0; k < n; ++k) {
    row_reach(k, reach);
    for (int j : reach) ++count[j];
  }
  lp_.assign(n + 1, 0);
  for (int j = 0; j < n; ++j) lp_[j + 1] = lp_[j] + count[j];
  li_.assign(lp_[n], 0);
  lx_.assign(lp_[n], 0.0);

  std::vector<int> head(n);
  for (int j = 0; j < n; ++j) {
    li_[lp_[j]] = j;  // diagonal first in each column
    head[j] = lp_[j] + 1;
  }
  std::fill(mark.begin(), mark.end(), -1);
  Vector x(n, 0.0);
  for (int k = 0; k < n; ++k) {
    row_reach(k, reach);
    for (int p = a.row_ptr[k]; p < a.row_ptr[k + 1]; ++p)
      if (a.col_idx[p] <= k) x[a.col_idx[p]] = a.vals[p];
    double d = x[k];
    x[k] = 0.0;
    for (int j : reach) {
      const double lkj = x[j] / lx_[lp_[j]];
      x[j] = 0.0;
      for (int p = lp_[j] + 1; p < head[j]; ++p) x[li_[p]] -= lx_[p] * lkj;
      d -= lkj * lkj;
      li_[head[j]] = k;
      lx_[head[j]] = lkj;
      ++head[j];
    }
    if (!(d > 0.0))
      throw std::runtime_error("SparseCholesky: non-positive pivot at row " +
                               std::to_string(k));
    lx_[lp_[k]] = std::sqrt(d);
  }
}

void SparseCholesky::solve_in_place(Vector& x) const {
  for (int j = 0; j < n_; ++j) {
    x[j] /= lx_[lp_[j]];
    const double xj = x[j];
    for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) x[li_[p]] -= lx_[p] * xj;
  }
  for (int j = n_ - 1; j >= 0; --j) {
    double s = x[j];
    for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) s -= lx_[p] * x[li_[p]];
    x[j] = s / lx_[lp_[j]];
  }
}

Vector SparseCholesky::solve(const Vector& b, bool refine) const {
  if (static_cast<int>(b.size()) != n_)
    throw std::invalid_argument("SparseCholesky::solve: size mismatch");
  Vector x = b;
  solve_in_place(x);
  if (refine) {
    Vector r = a_.apply(x);
    for (int i = 0; i < n_; ++i) r[i] = b[i] - r[i];
    solve_in_place(r);
    axpy(1.0, r, x);
  }
  return x;
}

DenseCholesky::DenseCholesky(DenseMatrix a) : n_(a.rows()), l_(std::move(a)) {
  if (l_.rows() != l_.cols()) throw std::invalid_argument("DenseCholesky: not square");
  for (int j = 0; j < n_; ++j) {
    double d = l_(j, j);
    for (int k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > 0.0))
      throw std::runtime_error("DenseCholesky: non-positive pivot at row " +
                               std::to_string(j));
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (int i = j + 1; i < n_; ++i) {
      double s = l_(i, j);
      for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
}

Vector DenseCholesky::forward(const Vector& b) const {
  Vector x = b;
  for (int i = 0; i < n_; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= l_(i, k) * x[k];
    x[i] = s / l_(i, i);
  }
  return x;
}

Vector DenseCholesky::backward(const Vector& b) const {
  Vector x = b;
  for (int i = n_ - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n_; ++k) s -= l_(k, i) * x[k];
    x[i] = s / l_(i, i);
  }
  return x;
}

Vector DenseCholesky::solve(const Vector& b) const {
  if (static_cast<int>(b.size()) != n_)
    throw std::invalid_argument("DenseCholesky::solve: size mismatch");
  return backward(forward(b));
}

// ---------------------------------------------------------- singular SPSD

DeflatedSolver::DeflatedSolver(const CsrMatrix& a, Vector nullspace) {
  if (a.nrows != a.ncols) throw std::invalid_argument("DeflatedSolver: not square");
  const double nn = nrm2(nullspace);
  if (!(nn > 0.0)) throw std::invalid_argument("DeflatedSolver: zero nullspace vector");
  scale(nullspace, 1.0 / nn);
  dir_ = std::move(nullspace);

  const Vector an = a.apply(dir_);
  const double anorm = std::max(a.max_abs(), 1e-300);
  if (nrm_inf(an) > 1e-8 * anorm)
    throw std::invalid_argument("DeflatedSolver: vector is not in the kernel");

  const double sigma = a.trace() / a.nrows;
  DenseMatrix shifted = to_dense(a);
  for (int i = 0; i < a.nrows; ++i)
    for (int j = 0; j < a.ncols; ++j) shifted(i, j) += sigma * dir_[i] * dir_[j];
  try {
    chol_.emplace(std::move(shifted));
  } catch (const std::runtime_error&) {
    // shifted matrix still singular: the kernel is larger than one dimension
    throw std::invalid_argument("DeflatedSolver: kernel dimension exceeds one");
  }
}

Vector DeflatedSolver::solve(const Vector& b) const {
  Vector rhs = b;
  project_out(rhs, dir_);
  Vector x = chol_->solve(rhs);
  project_out(x, dir_);
  return x;
}

Vector deflated_solve(const CsrMatrix& a, const Vector& nullspace, const Vector& b) {
  return DeflatedSolver(a, nullspace).solve(b);
}

}  // namespace specmg
