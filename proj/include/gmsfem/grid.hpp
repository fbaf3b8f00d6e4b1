#pragma once

#include <utility>
#include <vector>

namespace gmsfem {

/// Inclusive rectangle of fine-grid indices (nodes or cells).
struct IndexRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  int count() const { return width() * height(); }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool on_perimeter(int x, int y) const {
    return contains(x, y) && (x == x0 || x == x1 || y == y0 || y == y1);
  }
};

/// Structured coarse/fine tensor-product grids on the unit square.
///
/// The coarse grid has nx_coarse x ny_coarse cells, each refined into
/// nx_sub x ny_sub fine cells. Coarse nodes are the coarse-grid vertices;
/// the neighborhood of coarse node x_i is the union of coarse cells having
/// x_i as a vertex. All orderings are lexicographic by (y, x).
struct StructuredGrids {
  int nx_coarse = 0, ny_coarse = 0;
  int nx_sub = 0, ny_sub = 0;
  int nx_fine = 0, ny_fine = 0;  // fine cells per axis

  double Hx = 0, Hy = 0;  // coarse mesh sizes
  double hx = 0, hy = 0;  // fine mesh sizes

  int n_coarse_nodes = 0;
  int n_fine_nodes = 0;
  int n_fine_cells = 0;

  // Per coarse node: member coarse cells, fine cells, fine nodes of the
  // closed neighborhood, and fine nodes strictly inside it. Node lists are
  // ordered lexicographically by (y, x).
  std::vector<std::vector<int>> omega_coarse_cells;
  std::vector<std::vector<int>> omega_fine_cells;
  std::vector<std::vector<int>> omega_nodes;
  std::vector<std::vector<int>> omega_interior_nodes;
  std::vector<IndexRect> omega_node_rect;  // node-index bounding box of omega_i

  std::vector<char> boundary_node;  // 1 if fine node lies on the domain boundary

  int fine_node(int fx, int fy) const { return fy * (nx_fine + 1) + fx; }
  int fine_cell(int cx, int cy) const { return cy * nx_fine + cx; }
  int coarse_node(int cx, int cy) const { return cy * (nx_coarse + 1) + cx; }
  int coarse_cell(int cx, int cy) const { return cy * nx_coarse + cx; }

  std::pair<int, int> fine_node_xy(int p) const {
    return {p % (nx_fine + 1), p / (nx_fine + 1)};
  }
  std::pair<int, int> fine_cell_xy(int c) const { return {c % nx_fine, c / nx_fine}; }
  std::pair<int, int> coarse_node_xy(int i) const {
    return {i % (nx_coarse + 1), i / (nx_coarse + 1)};
  }

  double node_x(int fx) const { return fx * hx; }
  double node_y(int fy) const { return fy * hy; }

  /// Local index of a fine node within a node rectangle, -1 if outside.
  static int local_index(const IndexRect& r, int fx, int fy) {
    if (!r.contains(fx, fy)) return -1;
    return (fy - r.y0) * r.width() + (fx - r.x0);
  }

  std::vector<int> domain_boundary_nodes() const;
};

/// Build fully populated grids. Throws std::invalid_argument on counts < 1.
StructuredGrids build_grids(int nx_coarse, int ny_coarse, int nx_sub, int ny_sub);

/// All fine nodes of the closed neighborhood of coarse node i, and the
/// subset strictly inside it, both lexicographic by (y, x).
std::pair<std::vector<int>, std::vector<int>> neighborhood_fine_dofs(
    const StructuredGrids& grids, int i);

}  // namespace gmsfem
