#include <doctest.h>

#include <set>

#include "specmg/grid.hpp"

using namespace specmg;

TEST_SUITE("grid") {

TEST_CASE("hierarchy construction and derived counts") {
  const GridHierarchy g = build_hierarchy(3, {8, 8, 8}, {8.0, 8.0, 8.0}, {2, 2, 2}, 2);
  CHECK(g.num_cells() == 512);
  CHECK(g.num_cc_blocks() == 8);
  CHECK(g.num_coarse_blocks() == 64);
  CHECK(g.h[0] == doctest::Approx(1.0));
  CHECK(g.cell_volume() == doctest::Approx(1.0));
}

TEST_CASE("2d grids collapse the z axis") {
  const GridHierarchy g = build_hierarchy(2, {12, 6, 5}, {12.0, 3.0, 9.0}, {2, 2, 4}, 3);
  CHECK(g.n[2] == 1);
  CHECK(g.cc[2] == 1);
  CHECK(g.sd_axis(2) == 1);
  CHECK(g.num_cells() == 72);
  CHECK(g.num_coarse_blocks() == 2 * 3 * 2 * 3);
  CHECK(g.h[1] == doctest::Approx(0.5));
}

TEST_CASE("construction validates divisibility and positivity") {
  CHECK_THROWS(build_hierarchy(3, {8, 8, 7}, {1, 1, 1}, {2, 2, 2}, 2));  // z not divisible
  CHECK_THROWS(build_hierarchy(2, {9, 8, 1}, {1, 1, 1}, {2, 2, 1}, 2));  // x not divisible
  CHECK_THROWS(build_hierarchy(2, {0, 8, 1}, {1, 1, 1}, {1, 1, 1}, 1));
  CHECK_THROWS(build_hierarchy(4, {8, 8, 8}, {1, 1, 1}, {2, 2, 2}, 2));
  CHECK_THROWS(build_hierarchy(2, {8, 8, 1}, {1, -1, 1}, {2, 2, 1}, 2));
}

TEST_CASE("cell indexing is a lexicographic bijection, x fastest") {
  const GridHierarchy g = build_hierarchy(3, {4, 6, 2}, {4, 6, 2}, {2, 1, 1}, 2);
  CHECK(g.cell_index(1, 0, 0) == 1);
  CHECK(g.cell_index(0, 1, 0) == 4);
  CHECK(g.cell_index(0, 0, 1) == 24);
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto m = g.cell_multi(c);
    CHECK(g.cell_index(m[0], m[1], m[2]) == c);
  }
}

TEST_CASE("internal faces are grouped by axis and complete") {
  const GridHierarchy g = build_hierarchy(2, {4, 3, 1}, {4, 3, 1}, {1, 1, 1}, 1);
  const std::vector<Face> faces = internal_faces(g);
  CHECK(static_cast<int>(faces.size()) == num_internal_faces(g));
  CHECK(faces.size() == 3 * 3 + 4 * 2);  // x faces then y faces
  int last_axis = 0;
  for (const Face& f : faces) {
    CHECK(f.axis >= last_axis);  // grouped by axis
    last_axis = f.axis;
    const auto mm = g.cell_multi(f.minus);
    const auto mp = g.cell_multi(f.plus);
    for (int a = 0; a < 3; ++a)
      CHECK(mp[a] - mm[a] == (a == f.axis ? 1 : 0));
  }
  std::set<std::pair<int, int>> uniq;
  for (const Face& f : faces) uniq.insert({f.minus, f.plus});
  CHECK(uniq.size() == faces.size());
}

TEST_CASE("block maps partition the cells at both levels") {
  const GridHierarchy g = build_hierarchy(3, {8, 4, 4}, {8, 4, 4}, {2, 1, 1}, 2);
  for (const Level lvl : {Level::Coarse, Level::CoarseCoarse}) {
    const BlockMap map = make_block_map(g, lvl);
    const int nb = map.num_blocks();
    CHECK(nb == (lvl == Level::Coarse ? g.num_coarse_blocks() : g.num_cc_blocks()));
    std::vector<int> owner(g.num_cells(), -1);
    for (int b = 0; b < nb; ++b) {
      for (const int c : map.block_cells(b)) {
        CHECK(owner[c] == -1);
        owner[c] = b;
        CHECK(map.block_of(c) == b);
      }
    }
    for (const int o : owner) CHECK(o >= 0);
  }
}

TEST_CASE("coarse blocks nest inside their coarse-coarse parents") {
  const GridHierarchy g = build_hierarchy(2, {12, 12, 1}, {12, 12, 1}, {2, 3, 1}, 2);
  const BlockMap cmap = make_block_map(g, Level::Coarse);
  const BlockMap ccmap = make_block_map(g, Level::CoarseCoarse);
  for (int b = 0; b < cmap.num_blocks(); ++b) {
    const int parent = cc_parent(g, b);
    for (const int c : cmap.block_cells(b)) CHECK(ccmap.block_of(c) == parent);
  }
}

}  // TEST_SUITE
