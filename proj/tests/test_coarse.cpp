#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "specmg/coarse.hpp"
#include "specmg/tpfa.hpp"

using namespace specmg;
using testing::max_abs_diff;
using testing::random_orthotropic;
using testing::uniform_block_eigenvalues;

namespace {

struct Setup {
  GridHierarchy g;
  PressureSystem sys;
  Vector weight;
};

Setup make_setup(const GridHierarchy& g, const PermeabilityField& f,
                 const BoundarySpec& bc = BoundarySpec::no_flow()) {
  const NormalizedField nf = normalize(f, g);
  return {g, assemble(nf, g, bc), nf.trace};
}

DenseMatrix dense_r(const CsrMatrix& r) { return to_dense(r); }

}  // namespace

TEST_SUITE("coarse") {

TEST_CASE("threshold selection counts, clamps, and reports saturation") {
  bool sat = false;
  CHECK(select_by_threshold({0.0, 1e-4, 5e-4}, 2e-4, 20, &sat) == 2);
  CHECK_FALSE(sat);
  CHECK(select_by_threshold({0.0, 1.0, 2.0}, 0.5, 20, &sat) == 1);  // keeps the zero mode
  CHECK(select_by_threshold({0.0, 1.0, 2.0}, 1e-30, 20, &sat) == 1);
  Vector many(30);
  for (int i = 0; i < 30; ++i) many[i] = i * 1e-6;
  CHECK(select_by_threshold(many, 1e12, 20, &sat) == 20);  // reduces to fixed count
  CHECK(sat);
  CHECK_THROWS(select_by_threshold(many, 1.0, 0, &sat));
}

TEST_CASE("block masking keeps in-block couplings and is dominated by A") {
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 2);
  const PermeabilityField f = random_orthotropic(g, 3, 5.0);
  const Setup s = make_setup(g, f, BoundarySpec::all_dirichlet(2));
  const BlockMap map = make_block_map(g, Level::Coarse);
  const CsrMatrix masked = mask_to_blocks(s.sys.A, map, nullptr);

  const DenseMatrix am = to_dense(masked);
  const DenseMatrix ad = to_dense(s.sys.A);
  for (int i = 0; i < g.num_cells(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < g.num_cells(); ++j) {
      row_sum += am(i, j);
      if (i == j) continue;
      if (map.block_of(i) == map.block_of(j)) {
        CHECK(am(i, j) == ad(i, j));
      } else {
        CHECK(am(i, j) == 0.0);
      }
    }
    CHECK(std::abs(row_sum) < 1e-12 * s.sys.A.max_abs());
  }
  // A - masked is positive semidefinite (dropped stencils and closures)
  const EigenDecomposition gap = dense_sym_eig(add(ad, am, -1.0));
  CHECK(gap.eigenvalues.front() > -1e-12 * s.sys.A.max_abs());
}

TEST_CASE("two-cell block: eigenvalues (0, 1) against the doubled weight") {
  const GridHierarchy g = build_hierarchy(2, {2, 1, 1}, {2, 1, 1}, {1, 1, 1}, 1);
  const Setup s = make_setup(g, gen_uniform(g, 1.0));
  // weight = trace = ktx + kty = 2 per cell
  const CoarseSpace wc = build_coarse_space_c(s.sys.A, nullptr, s.weight, g,
                                              SelectionRule::fixed(2));
  REQUIRE(wc.blocks.size() == 1);
  CHECK(wc.blocks[0].eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(wc.blocks[0].eigenvalues[1] == doctest::Approx(1.0));
}

TEST_CASE("zero mode: lowest local eigenvalue vanishes with a constant eigenvector") {
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 2);
  const BlockMap map = make_block_map(g, Level::Coarse);
  std::uint64_t seed = 500;
  for (int rep = 0; rep < 4; ++rep) {
    const PermeabilityField f = rep % 2 == 0
                                    ? random_orthotropic(g, seed++, 6.0)
                                    : gen_fractured(g, default_fracture_network(g), 4.0);
    // closures must not leak into the local problems even with Dirichlet bc
    const Setup s = make_setup(g, f, rep < 2 ? BoundarySpec::no_flow()
                                             : BoundarySpec::all_dirichlet(2));
    const CoarseSpace wc =
        build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(2));
    const DenseMatrix r = dense_r(wc.R);
    for (std::size_t b = 0; b < wc.blocks.size(); ++b) {
      CHECK(std::abs(wc.blocks[b].eigenvalues[0]) <= 1e-10);
      const std::vector<int> cells = map.block_cells(static_cast<int>(b));
      const int row = wc.dof_offset[b];
      const double first = r(row, cells[0]);
      for (const int c : cells) CHECK(r(row, c) == doctest::Approx(first).epsilon(1e-9));
    }
  }
}

TEST_CASE("restriction rows are weight-orthonormal with disjoint block supports") {
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 2);
  const Setup s = make_setup(g, random_orthotropic(g, 99, 4.0));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(3));
  const BlockMap map = make_block_map(g, Level::Coarse);

  const DenseMatrix r = dense_r(wc.R);
  DenseMatrix gram(wc.dim(), wc.dim());
  for (int i = 0; i < wc.dim(); ++i)
    for (int j = 0; j < wc.dim(); ++j) {
      double acc = 0.0;
      for (int c = 0; c < g.num_cells(); ++c) acc += r(i, c) * s.weight[c] * r(j, c);
      gram(i, j) = acc;
    }
  CHECK(max_abs_diff(gram, DenseMatrix::identity(wc.dim())) < 1e-10);

  // support containment: row of block b vanishes off the block
  for (std::size_t b = 0; b < wc.blocks.size(); ++b) {
    std::vector<char> in_block(g.num_cells(), 0);
    for (const int c : map.block_cells(static_cast<int>(b))) in_block[c] = 1;
    for (int row = wc.dof_offset[b]; row < wc.dof_offset[b + 1]; ++row)
      for (int c = 0; c < g.num_cells(); ++c)
        if (!in_block[c]) CHECK(r(row, c) == 0.0);
  }
}

TEST_CASE("galerkin relations hold through both levels") {
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 2);
  const Setup s = make_setup(g, random_orthotropic(g, 17, 5.0));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(3));
  const CoarseSpace wcc = build_coarse_space_cc(s.sys.A, nullptr, s.weight, g, wc,
                                                SelectionRule::fixed(4));

  const DenseMatrix ad = to_dense(s.sys.A);
  const DenseMatrix rc = dense_r(wc.R);
  const DenseMatrix rcc = dense_r(wcc.R);

  const DenseMatrix ac_want = matmul(rc, matmul(ad, rc.transposed()));
  CHECK(max_abs_diff(to_dense(wc.A_level), ac_want) < 1e-12 * ac_want.max_abs());

  const DenseMatrix rfine = matmul(rcc, rc);  // rows live in the level-c row space
  const DenseMatrix acc_want = matmul(rfine, matmul(ad, rfine.transposed()));
  CHECK(max_abs_diff(to_dense(wcc.A_level), acc_want) < 1e-12 * acc_want.max_abs());

  CHECK(stored_symmetric(wc.A_level));
  CHECK(stored_symmetric(wcc.A_level));

  // the global constant's coefficients are a null vector at both levels
  REQUIRE_FALSE(wc.constant_rep.empty());
  REQUIRE_FALSE(wcc.constant_rep.empty());
  CHECK(nrm_inf(wc.A_level.apply(wc.constant_rep)) < 1e-11 * wc.A_level.max_abs());
  CHECK(nrm_inf(wcc.A_level.apply(wcc.constant_rep)) < 1e-11 * wcc.A_level.max_abs());

  // and the coefficients really do reconstruct the constant
  Vector back(g.num_cells(), 0.0);
  for (int c = 0; c < g.num_cells(); ++c)
    for (int i = 0; i < wc.dim(); ++i) back[c] += rc(i, c) * wc.constant_rep[i];
  for (const double v : back) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("level-cc local problems see the level-c eigenvalues when blocks coincide") {
  // sd = 1 makes every coarse-coarse block contain exactly one coarse block,
  // so the projected local operator is the diagonal of kept eigenvalues.
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 1);
  const Setup s = make_setup(g, random_orthotropic(g, 23, 4.0));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(5));
  const CoarseSpace wcc = build_coarse_space_cc(s.sys.A, nullptr, s.weight, g, wc,
                                                SelectionRule::fixed(5));
  REQUIRE(wcc.blocks.size() == wc.blocks.size());
  for (std::size_t b = 0; b < wc.blocks.size(); ++b) {
    for (int j = 0; j < 5; ++j) {
      CHECK(wcc.blocks[b].eigenvalues[j] ==
            doctest::Approx(wc.blocks[b].eigenvalues[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("level-cc construction rejects an unnormalized level-c basis") {
  const GridHierarchy g = build_hierarchy(2, {4, 4, 1}, {4, 4, 1}, {2, 2, 1}, 1);
  const Setup s = make_setup(g, gen_uniform(g, 1.0));
  CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(2));
  for (double& v : wc.R.vals) v *= 2.0;  // break the normalization
  CHECK_THROWS_AS(build_coarse_space_cc(s.sys.A, nullptr, s.weight, g, wc,
                                        SelectionRule::fixed(2)),
                  std::runtime_error);
}

TEST_CASE("uniform box block reproduces the closed-form spectrum with its ladder") {
  const GridHierarchy g = build_hierarchy(3, {4, 4, 4}, {4, 4, 4}, {1, 1, 1}, 1);
  const Setup s = make_setup(g, gen_uniform(g, 2.5));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(1));
  REQUIRE(wc.blocks.size() == 1);
  const Vector want = uniform_block_eigenvalues(4, 4, 4, 3);
  REQUIRE(wc.blocks[0].eigenvalues.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(wc.blocks[0].eigenvalues[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("degenerate groups are never split by the kept count") {
  const GridHierarchy g = build_hierarchy(3, {4, 4, 4}, {4, 4, 4}, {1, 1, 1}, 1);
  const Setup s = make_setup(g, gen_uniform(g, 1.0));
  // lowest levels: multiplicities 1, 3, ...; a fixed count of 2 lands inside
  // the first triple and must widen to 4
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(2));
  CHECK(wc.blocks[0].kept == 4);
  CHECK(wc.dim() == 4);
}

TEST_CASE("full local spaces make the restriction square and exact") {
  const GridHierarchy g = build_hierarchy(2, {4, 4, 1}, {4, 4, 1}, {2, 2, 1}, 1);
  const Setup s = make_setup(g, random_orthotropic(g, 31, 3.0));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(4));
  CHECK(wc.dim() == g.num_cells());
  // similar matrices share their spectrum: check via the trace identity on A S^{-1}
  const DenseMatrix ad = to_dense(s.sys.A);
  const DenseMatrix ac = to_dense(wc.A_level);
  double tr_gen = 0.0;  // trace of S^{-1} A = sum of generalized eigenvalues
  for (int i = 0; i < g.num_cells(); ++i) tr_gen += ad(i, i) / s.weight[i];
  double tr_ac = 0.0;
  for (int i = 0; i < wc.dim(); ++i) tr_ac += ac(i, i);
  CHECK(tr_ac == doctest::Approx(tr_gen).epsilon(1e-12));
}

TEST_CASE("first discarded eigenvalue drives the stability constant") {
  const GridHierarchy g = build_hierarchy(2, {8, 8, 1}, {8, 8, 1}, {2, 2, 1}, 2);
  const Setup s = make_setup(g, random_orthotropic(g, 57, 4.0));
  const CoarseSpace wc =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(2));
  double want = std::numeric_limits<double>::infinity();
  for (const BlockSpectralBasis& b : wc.blocks) {
    REQUIRE(b.kept <= static_cast<int>(b.eigenvalues.size()));
    if (b.kept < static_cast<int>(b.eigenvalues.size()))
      want = std::min(want, b.eigenvalues[b.kept]);
  }
  CHECK(wc.min_first_discarded() == doctest::Approx(want));

  const CoarseSpace full =
      build_coarse_space_c(s.sys.A, nullptr, s.weight, g, SelectionRule::fixed(4));
  CHECK(std::isinf(full.min_first_discarded()));
}

}  // TEST_SUITE
