#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace specmg {

using Vector = std::vector<double>;

// ---------------------------------------------------------------- vectors

double dot(const Vector& a, const Vector& b);
double nrm2(const Vector& v);
double nrm_inf(const Vector& v);

/// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
void scale(Vector& v, double alpha);

/// Removes the component of v along the unit vector dir: v -= (dir.v) dir.
void project_out(Vector& v, const Vector& dir);

Vector constant_vector(int n, double value);

/// Unit-norm constant vector, the kernel direction of pure no-flow systems.
Vector unit_constant(int n);

// ----------------------------------------------------------- dense matrix

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, value) {}

  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  DenseMatrix transposed() const;
  double max_abs() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, const Vector& x);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b, double beta = 1.0);

/// Max |a(i,j) - a(j,i)| over the matrix.
double symmetry_defect(const DenseMatrix& a);

// ---------------------------------------------------------- sparse matrix

/// Compressed sparse row storage. Column indices are sorted within each row
/// and duplicates are merged at construction.
struct CsrMatrix {
  int nrows = 0;
  int ncols = 0;
  std::vector<int> row_ptr;  // size nrows + 1
  std::vector<int> col_idx;
  std::vector<double> vals;
  bool symmetric = false;  // set by builders that guarantee exact stored symmetry

  int nnz() const { return static_cast<int>(col_idx.size()); }
  Vector apply(const Vector& x) const;
  double trace() const;
  double max_abs() const;
};

struct Triplet {
  int row;
  int col;
  double val;
};

CsrMatrix csr_from_triplets(int nrows, int ncols, std::vector<Triplet> entries);
CsrMatrix csr_identity(int n);
CsrMatrix csr_transpose(const CsrMatrix& a);
CsrMatrix csr_multiply(const CsrMatrix& a, const CsrMatrix& b);

/// R * A * R^T with exact stored symmetry: the result is averaged with its
/// transpose entry by entry so that (i,j) and (j,i) are bitwise equal.
CsrMatrix galerkin_product(const CsrMatrix& r, const CsrMatrix& a);

CsrMatrix csr_symmetrize(const CsrMatrix& a);
DenseMatrix to_dense(const CsrMatrix& a);

/// True when the stored pattern and values equal the transpose exactly.
bool stored_symmetric(const CsrMatrix& a);

Vector spmv(const CsrMatrix& a, const Vector& x);

// ------------------------------------------------------------ eigensolver

struct EigenDecomposition {
  Vector eigenvalues;    // ascending
  DenseMatrix vectors;   // column k pairs with eigenvalues[k]
};

/// Solves A w = lambda diag(b) w for symmetric A and positive diagonal b.
/// Reduction to standard form via diag(b)^{-1/2}, then Householder
/// tridiagonalization and implicit-shift QL. Eigenvectors come back
/// b-orthonormal, ascending, with a canonical sign.
EigenDecomposition dense_sym_eig(const DenseMatrix& a, const Vector& b_diag);
EigenDecomposition dense_sym_eig(const DenseMatrix& a);

/// Generalized problem A w = lambda B w with dense SPD B, reduced through the
/// Cholesky factor of B. Eigenvectors are B-orthonormal.
EigenDecomposition dense_sym_eig_spd_b(const DenseMatrix& a, const DenseMatrix& b);

// --------------------------------------------------------------- Cholesky

/// Up-looking sparse Cholesky A = L L^T over the elimination tree.
/// Lexicographic order is kept as-is; fill is acceptable at the block and
/// coarse-operator sizes this project factors.
class SparseCholesky {
 public:
  explicit SparseCholesky(const CsrMatrix& a);

  /// Solve A x = b. One step of iterative refinement by default keeps the
  /// residual near machine precision even for high-contrast blocks.
  Vector solve(const Vector& b, bool refine = true) const;

  int order() const { return n_; }

 private:
  void solve_in_place(Vector& x) const;

  int n_ = 0;
  std::vector<int> lp_, li_;
  std::vector<double> lx_;
  CsrMatrix a_;
};

class DenseCholesky {
 public:
  explicit DenseCholesky(DenseMatrix a);
  Vector solve(const Vector& b) const;
  Vector forward(const Vector& b) const;   // L y = b
  Vector backward(const Vector& b) const;  // L^T x = y
  int order() const { return n_; }

 private:
  int n_ = 0;
  DenseMatrix l_;
};

// ---------------------------------------------------------- singular SPSD

/// Solve of a symmetric positive semidefinite system with a known
/// one-dimensional kernel. The right-hand side is projected onto the
/// complement of the kernel, the rank-one shifted matrix
/// A + sigma n n^T (sigma = trace(A)/nrows) is factored once, and the
/// result is projected again.
class DeflatedSolver {
 public:
  DeflatedSolver(const CsrMatrix& a, Vector nullspace);
  Vector solve(const Vector& b) const;
  const Vector& kernel() const { return dir_; }

 private:
  Vector dir_;  // unit kernel direction
  std::optional<DenseCholesky> chol_;
};

/// One-shot pseudo-inverse application (factors on every call).
Vector deflated_solve(const CsrMatrix& a, const Vector& nullspace, const Vector& b);

}  // namespace specmg
