#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace specmg::testing {

DenseMatrix oracle_assemble_dense(const GridHierarchy& g, const PermeabilityField& f,
                                  const BoundarySpec& bc, const Vector* mobility) {
  const int n = g.num_cells();
  DenseMatrix a(n, n);
  const auto kt = [&](int axis, int cell) {
    return f.component(axis, cell) / (g.h[axis] * g.h[axis]);
  };
  for (int k = 0; k < g.n[2]; ++k) {
    for (int j = 0; j < g.n[1]; ++j) {
      for (int i = 0; i < g.n[0]; ++i) {
        const int c = g.cell_index(i, j, k);
        const int idx[3] = {i, j, k};
        for (int axis = 0; axis < g.dim; ++axis) {
          // face toward the positive neighbor along axis
          if (idx[axis] + 1 < g.n[axis]) {
            const int nb = axis == 0 ? g.cell_index(i + 1, j, k)
                           : axis == 1 ? g.cell_index(i, j + 1, k)
                                       : g.cell_index(i, j, k + 1);
            const double ka = kt(axis, c);
            const double kb = kt(axis, nb);
            double t = 2.0 * ka * kb / (ka + kb);
            if (mobility) t *= 0.5 * ((*mobility)[c] + (*mobility)[nb]);
            a(c, c) += t;
            a(nb, nb) += t;
            a(c, nb) -= t;
            a(nb, c) -= t;
          }
          // half-cell closures on Dirichlet sides
          if (idx[axis] == 0 && bc.dirichlet[axis][0]) {
            double t = 2.0 * kt(axis, c);
            if (mobility) t *= (*mobility)[c];
            a(c, c) += t;
          }
          if (idx[axis] == g.n[axis] - 1 && bc.dirichlet[axis][1]) {
            double t = 2.0 * kt(axis, c);
            if (mobility) t *= (*mobility)[c];
            a(c, c) += t;
          }
        }
      }
    }
  }
  return a;
}

DenseMatrix dense_columns(int n, const std::function<Vector(const Vector&)>& op) {
  DenseMatrix m(n, n);
  Vector e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = op(e);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) m(i, j) = col[i];
  }
  return m;
}

DenseMatrix oracle_pseudo_inverse(const DenseMatrix& a, double rel_cutoff) {
  const EigenDecomposition eig = dense_sym_eig(a);
  const int n = a.rows();
  double lmax = 0.0;
  for (const double l : eig.eigenvalues) lmax = std::max(lmax, std::abs(l));
  DenseMatrix out(n, n);
  for (int k = 0; k < n; ++k) {
    const double l = eig.eigenvalues[k];
    if (std::abs(l) <= rel_cutoff * lmax) continue;
    const double w = 1.0 / l;
    for (int i = 0; i < n; ++i) {
      const double viw = eig.vectors(i, k) * w;
      for (int j = 0; j < n; ++j) out(i, j) += viw * eig.vectors(j, k);
    }
  }
  return out;
}

DenseMatrix oracle_two_grid_inverse(const DenseMatrix& s, const DenseMatrix& a,
                                    const DenseMatrix& r, const DenseMatrix& coarse_inv) {
  const int n = a.rows();
  const DenseMatrix i_n = DenseMatrix::identity(n);
  const DenseMatrix sa = matmul(s, a);
  const DenseMatrix post = add(i_n, matmul(a, s), -1.0);   // I - A S
  const DenseMatrix pre = add(i_n, sa, -1.0);              // I - S A
  const DenseMatrix rt = r.transposed();
  const DenseMatrix correction =
      matmul(pre, matmul(rt, matmul(coarse_inv, matmul(r, post))));
  // 2S - SAS + (I - SA) R^T C R (I - AS)
  DenseMatrix out = add(add(s, s), matmul(sa, s), -1.0);
  return add(out, correction);
}

double max_abs_diff(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) m = std::max(m, std::abs(x(i, j) - y(i, j)));
  return m;
}

PermeabilityField random_orthotropic(const GridHierarchy& g, std::uint64_t seed,
                                     double log10_span) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, log10_span);
  const int n = g.num_cells();
  PermeabilityField f;
  f.dim = g.dim;
  f.kx.resize(n);
  f.ky.resize(n);
  f.kz.assign(n, 1.0);
  f.phi.assign(n, 0.2);
  for (int c = 0; c < n; ++c) {
    f.kx[c] = std::pow(10.0, u(rng));
    f.ky[c] = std::pow(10.0, u(rng));
    if (g.dim == 3) f.kz[c] = std::pow(10.0, u(rng));
  }
  return f;
}

Vector uniform_block_eigenvalues(int nx, int ny, int nz, int dim) {
  const auto chain = [](int n) {
    Vector v(n);
    for (int k = 0; k < n; ++k) v[k] = 2.0 * (1.0 - std::cos(std::numbers::pi * k / n));
    return v;
  };
  const Vector lx = chain(nx);
  const Vector ly = chain(ny);
  const Vector lz = chain(dim == 3 ? nz : 1);
  Vector out;
  out.reserve(static_cast<std::size_t>(nx) * ny * (dim == 3 ? nz : 1));
  for (const double c : lz)
    for (const double b : ly)
      for (const double a : lx) out.push_back((a + b + c) / dim);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace specmg::testing
