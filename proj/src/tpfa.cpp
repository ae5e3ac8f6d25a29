#include "specmg/tpfa.hpp"

#include <cmath>
#include <stdexcept>

namespace specmg {

namespace {

double face_mobility(const Vector* cell_mobility, int a, int b) {
  if (!cell_mobility) return 1.0;
  return 0.5 * ((*cell_mobility)[a] + (*cell_mobility)[b]);
}

}  // namespace

PressureSystem assemble(const NormalizedField& nf, const GridHierarchy& g,
                        const BoundarySpec& bc, const Vector* sources,
                        const WellCoupling* wells, const Vector* cell_mobility) {
  const int n = g.num_cells();
  if (static_cast<int>(nf.trace.size()) != n)
    throw std::invalid_argument("assemble: field does not match grid");
  if (sources && static_cast<int>(sources->size()) != n)
    throw std::invalid_argument("assemble: source vector size mismatch");
  if (cell_mobility && static_cast<int>(cell_mobility->size()) != n)
    throw std::invalid_argument("assemble: mobility vector size mismatch");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<size_t>(n) * (2 * g.dim + 1));
  Vector diag(n, 0.0);
  for (const Face& f : internal_faces(g)) {
    const double t = face_transmissibility(nf, f) * face_mobility(cell_mobility, f.minus, f.plus);
    diag[f.minus] += t;
    diag[f.plus] += t;
    entries.push_back({f.minus, f.plus, -t});
    entries.push_back({f.plus, f.minus, -t});
  }

  PressureSystem sys;
  sys.rhs.assign(n, 0.0);
  sys.added_diag.assign(n, 0.0);
  if (sources)
    for (int c = 0; c < n; ++c) sys.rhs[c] += (*sources)[c];

  // Dirichlet closure: distance h/2 from cell center to the boundary face
  // doubles the one-sided conductance.
  for (int axis = 0; axis < g.dim; ++axis)
    for (int side = 0; side < 2; ++side) {
      if (!bc.dirichlet[axis][side]) continue;
      const int pos = (side == 0) ? 0 : g.n[axis] - 1;
      for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
          for (int i = 0; i < g.n[0]; ++i) {
            const std::array<int, 3> m = {i, j, k};
            if (m[axis] != pos) continue;
            const int c = g.cell_index(i, j, k);
            const double t =
                2.0 * nf.component(axis, c) * face_mobility(cell_mobility, c, c);
            diag[c] += t;
            sys.added_diag[c] += t;
          }
    }

  bool well_coupled = false;
  if (wells) {
    if (static_cast<int>(wells->diag.size()) != n ||
        static_cast<int>(wells->rhs.size()) != n)
      throw std::invalid_argument("assemble: well coupling size mismatch");
    well_coupled = wells->couples();
    for (int c = 0; c < n; ++c) {
      diag[c] += wells->diag[c];
      sys.added_diag[c] += wells->diag[c];
      sys.rhs[c] += wells->rhs[c];
    }
  }

  for (int c = 0; c < n; ++c) entries.push_back({c, c, diag[c]});
  sys.A = csr_from_triplets(n, n, std::move(entries));
  sys.A.symmetric = true;

  if (!bc.any() && !well_coupled) sys.nullspace = unit_constant(n);
  return sys;
}

Vector default_sources(const GridHierarchy& g, double q) {
  Vector f(g.num_cells(), 0.0);
  const int nx = g.n[0], ny = g.n[1];
  const std::array<std::array<int, 2>, 4> corners = {
      {{0, 0}, {nx - 1, 0}, {0, ny - 1}, {nx - 1, ny - 1}}};
  for (int k = 0; k < g.n[2]; ++k) {
    for (const auto& cr : corners) f[g.cell_index(cr[0], cr[1], k)] += q;
    f[g.cell_index(nx / 2, ny / 2, k)] -= 4.0 * q;
  }
  return f;
}

FaceFluxField recover_velocity(const GridHierarchy& g, const NormalizedField& nf,
                               const Vector& p, const Vector* cell_mobility) {
  if (static_cast<int>(p.size()) != g.num_cells())
    throw std::invalid_argument("recover_velocity: pressure size mismatch");
  FaceFluxField v;
  const std::vector<Face> faces = internal_faces(g);
  v.flux.resize(faces.size());
  for (size_t e = 0; e < faces.size(); ++e) {
    const Face& f = faces[e];
    const double t = face_transmissibility(nf, f) * face_mobility(cell_mobility, f.minus, f.plus);
    v.flux[e] = -t * (p[f.plus] - p[f.minus]);
  }
  return v;
}

double check_conservation(const GridHierarchy& g, const FaceFluxField& v,
                          const Vector& rhs) {
  const std::vector<Face> faces = internal_faces(g);
  if (v.flux.size() != faces.size())
    throw std::invalid_argument("check_conservation: flux size mismatch");
  Vector div(g.num_cells(), 0.0);
  for (size_t e = 0; e < faces.size(); ++e) {
    div[faces[e].minus] += v.flux[e];
    div[faces[e].plus] -= v.flux[e];
  }
  double worst = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) worst = std::max(worst, std::abs(div[c] - rhs[c]));
  return worst;
}

}  // namespace specmg
