#pragma once

#include <array>
#include <vector>

namespace specmg {

/// Structured orthogonal grid with the two nested block partitions used by
/// the preconditioner: coarse-coarse blocks per axis, each split into sd
/// coarse elements per axis. Cells are indexed lexicographically, x fastest.
/// 2D grids are stored with one cell in z.
struct GridHierarchy {
  int dim = 0;
  std::array<int, 3> n = {0, 0, 1};          // fine cells per axis
  std::array<double, 3> h = {0.0, 0.0, 1.0};  // cell sizes
  std::array<int, 3> cc = {1, 1, 1};          // coarse-coarse blocks per axis
  int sd = 1;                                 // coarse elements per cc block per axis

  int num_cells() const { return n[0] * n[1] * n[2]; }
  int num_cc_blocks() const { return cc[0] * cc[1] * cc[2]; }
  /// Coarse elements per cc block along one axis (1 along z in 2D).
  int sd_axis(int axis) const { return (dim == 2 && axis == 2) ? 1 : sd; }
  int num_coarse_blocks() const {
    return cc[0] * sd_axis(0) * cc[1] * sd_axis(1) * cc[2] * sd_axis(2);
  }

  int cell_index(int i, int j, int k) const { return i + n[0] * (j + n[1] * k); }
  std::array<int, 3> cell_multi(int idx) const {
    const int i = idx % n[0];
    const int j = (idx / n[0]) % n[1];
    const int k = idx / (n[0] * n[1]);
    return {i, j, k};
  }
  double cell_volume() const { return h[0] * h[1] * h[2]; }
};

GridHierarchy build_hierarchy(int dim, std::array<int, 3> cells,
                              std::array<double, 3> lengths, std::array<int, 3> cc,
                              int sd);

/// Oriented internal face between the cell on the negative side and its
/// neighbor one step along axis.
struct Face {
  int minus;
  int plus;
  int axis;
};

/// All internal faces, grouped by axis, lexicographic within each axis.
std::vector<Face> internal_faces(const GridHierarchy& g);
int num_internal_faces(const GridHierarchy& g);

enum class Level { Coarse, CoarseCoarse };

/// Partition of fine cells into the axis-aligned blocks of one level.
struct BlockMap {
  Level level = Level::Coarse;
  std::array<int, 3> n = {0, 0, 1};         // fine cells per axis (copy)
  std::array<int, 3> blocks = {1, 1, 1};    // blocks per axis
  std::array<int, 3> cells_per = {1, 1, 1}; // block extent in fine cells per axis

  int num_blocks() const { return blocks[0] * blocks[1] * blocks[2]; }
  int block_index(int bi, int bj, int bk) const {
    return bi + blocks[0] * (bj + blocks[1] * bk);
  }
  std::array<int, 3> block_multi(int b) const {
    const int bi = b % blocks[0];
    const int bj = (b / blocks[0]) % blocks[1];
    const int bk = b / (blocks[0] * blocks[1]);
    return {bi, bj, bk};
  }
  int block_of(int cell) const;
  /// Fine-cell indices of block b, ascending.
  std::vector<int> block_cells(int b) const;
  /// Half-open fine-cell index range per axis.
  std::array<std::array<int, 2>, 3> block_range(int b) const;
};

BlockMap make_block_map(const GridHierarchy& g, Level level);

/// Coarse-coarse block containing the given coarse block.
int cc_parent(const GridHierarchy& g, int coarse_block);

}  // namespace specmg
