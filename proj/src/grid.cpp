#include "specmg/grid.hpp"

#include <stdexcept>
#include <string>

namespace specmg {

GridHierarchy build_hierarchy(int dim, std::array<int, 3> cells,
                              std::array<double, 3> lengths, std::array<int, 3> cc,
                              int sd) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("build_hierarchy: dim must be 2 or 3");
  if (sd < 1) throw std::invalid_argument("build_hierarchy: sd must be positive");
  GridHierarchy g;
  g.dim = dim;
  g.sd = sd;
  if (dim == 2) {
    cells[2] = 1;
    lengths[2] = 1.0;
    cc[2] = 1;
  }
  static const char* axis_name[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1)
      throw std::invalid_argument(std::string("build_hierarchy: no cells along ") +
                                  axis_name[a]);
    if (!(lengths[a] > 0.0))
      throw std::invalid_argument(std::string("build_hierarchy: non-positive length along ") +
                                  axis_name[a]);
    if (cc[a] < 1)
      throw std::invalid_argument(std::string("build_hierarchy: no blocks along ") +
                                  axis_name[a]);
    const int per = cc[a] * g.sd_axis(a);
    if (cells[a] % per != 0)
      throw std::invalid_argument(std::string("build_hierarchy: cells along ") +
                                  axis_name[a] + " (" + std::to_string(cells[a]) +
                                  ") not divisible by cc*sd (" + std::to_string(per) + ")");
    g.n[a] = cells[a];
    g.h[a] = lengths[a] / cells[a];
    g.cc[a] = cc[a];
  }
  return g;
}

std::vector<Face> internal_faces(const GridHierarchy& g) {
  std::vector<Face> faces;
  faces.reserve(num_internal_faces(g));
  const std::array<int, 3> stride = {1, g.n[0], g.n[0] * g.n[1]};
  for (int axis = 0; axis < 3; ++axis) {
    if (g.n[axis] < 2) continue;
    for (int k = 0; k < g.n[2]; ++k)
      for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) {
          const std::array<int, 3> m = {i, j, k};
          if (m[axis] + 1 >= g.n[axis]) continue;
          const int c = g.cell_index(i, j, k);
          faces.push_back({c, c + stride[axis], axis});
        }
  }
  return faces;
}

int num_internal_faces(const GridHierarchy& g) {
  int total = 0;
  for (int axis = 0; axis < 3; ++axis) {
    if (g.n[axis] < 2) continue;
    total += (g.n[axis] - 1) * g.n[(axis + 1) % 3] * g.n[(axis + 2) % 3];
  }
  return total;
}

int BlockMap::block_of(int cell) const {
  const int i = cell % n[0];
  const int j = (cell / n[0]) % n[1];
  const int k = cell / (n[0] * n[1]);
  return block_index(i / cells_per[0], j / cells_per[1], k / cells_per[2]);
}

std::vector<int> BlockMap::block_cells(int b) const {
  const auto r = block_range(b);
  std::vector<int> cells;
  cells.reserve((r[0][1] - r[0][0]) * (r[1][1] - r[1][0]) * (r[2][1] - r[2][0]));
  for (int k = r[2][0]; k < r[2][1]; ++k)
    for (int j = r[1][0]; j < r[1][1]; ++j)
      for (int i = r[0][0]; i < r[0][1]; ++i) cells.push_back(i + n[0] * (j + n[1] * k));
  return cells;
}

std::array<std::array<int, 2>, 3> BlockMap::block_range(int b) const {
  const auto m = block_multi(b);
  std::array<std::array<int, 2>, 3> r;
  for (int a = 0; a < 3; ++a) r[a] = {m[a] * cells_per[a], (m[a] + 1) * cells_per[a]};
  return r;
}

BlockMap make_block_map(const GridHierarchy& g, Level level) {
  BlockMap m;
  m.level = level;
  m.n = g.n;
  for (int a = 0; a < 3; ++a) {
    m.blocks[a] = (level == Level::CoarseCoarse) ? g.cc[a] : g.cc[a] * g.sd_axis(a);
    m.cells_per[a] = g.n[a] / m.blocks[a];
  }
  return m;
}

int cc_parent(const GridHierarchy& g, int coarse_block) {
  const BlockMap cm = make_block_map(g, Level::Coarse);
  const BlockMap ccm = make_block_map(g, Level::CoarseCoarse);
  const auto bm = cm.block_multi(coarse_block);
  return ccm.block_index(bm[0] / g.sd_axis(0), bm[1] / g.sd_axis(1), bm[2] / g.sd_axis(2));
}

}  // namespace specmg
