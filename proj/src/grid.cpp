#include "gmsfem/grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace gmsfem {

std::vector<int> StructuredGrids::domain_boundary_nodes() const {
  std::vector<int> out;
  for (int p = 0; p < n_fine_nodes; ++p)
    if (boundary_node[p]) out.push_back(p);
  return out;
}

StructuredGrids build_grids(int nx_coarse, int ny_coarse, int nx_sub, int ny_sub) {
  if (nx_coarse < 1 || ny_coarse < 1 || nx_sub < 1 || ny_sub < 1)
    throw std::invalid_argument("build_grids: all cell counts must be >= 1");

  StructuredGrids g;
  g.nx_coarse = nx_coarse;
  g.ny_coarse = ny_coarse;
  g.nx_sub = nx_sub;
  g.ny_sub = ny_sub;
  g.nx_fine = nx_coarse * nx_sub;
  g.ny_fine = ny_coarse * ny_sub;
  g.Hx = 1.0 / nx_coarse;
  g.Hy = 1.0 / ny_coarse;
  g.hx = g.Hx / nx_sub;
  g.hy = g.Hy / ny_sub;
  g.n_coarse_nodes = (nx_coarse + 1) * (ny_coarse + 1);
  g.n_fine_nodes = (g.nx_fine + 1) * (g.ny_fine + 1);
  g.n_fine_cells = g.nx_fine * g.ny_fine;

  g.boundary_node.assign(g.n_fine_nodes, 0);
  for (int fy = 0; fy <= g.ny_fine; ++fy)
    for (int fx = 0; fx <= g.nx_fine; ++fx)
      if (fx == 0 || fx == g.nx_fine || fy == 0 || fy == g.ny_fine)
        g.boundary_node[g.fine_node(fx, fy)] = 1;

  g.omega_coarse_cells.resize(g.n_coarse_nodes);
  g.omega_fine_cells.resize(g.n_coarse_nodes);
  g.omega_nodes.resize(g.n_coarse_nodes);
  g.omega_interior_nodes.resize(g.n_coarse_nodes);
  g.omega_node_rect.resize(g.n_coarse_nodes);

  for (int cy = 0; cy <= ny_coarse; ++cy) {
    for (int cx = 0; cx <= nx_coarse; ++cx) {
      const int i = g.coarse_node(cx, cy);

      // Coarse cells having node (cx, cy) as a vertex.
      const int kx0 = std::max(cx - 1, 0), kx1 = std::min(cx, nx_coarse - 1);
      const int ky0 = std::max(cy - 1, 0), ky1 = std::min(cy, ny_coarse - 1);
      for (int ky = ky0; ky <= ky1; ++ky)
        for (int kx = kx0; kx <= kx1; ++kx)
          g.omega_coarse_cells[i].push_back(g.coarse_cell(kx, ky));

      IndexRect nodes;
      nodes.x0 = kx0 * nx_sub;
      nodes.x1 = (kx1 + 1) * nx_sub;
      nodes.y0 = ky0 * ny_sub;
      nodes.y1 = (ky1 + 1) * ny_sub;
      g.omega_node_rect[i] = nodes;

      for (int fy = nodes.y0; fy < nodes.y1; ++fy)
        for (int fx = nodes.x0; fx < nodes.x1; ++fx)
          g.omega_fine_cells[i].push_back(g.fine_cell(fx, fy));

      for (int fy = nodes.y0; fy <= nodes.y1; ++fy)
        for (int fx = nodes.x0; fx <= nodes.x1; ++fx) {
          const int p = g.fine_node(fx, fy);
          g.omega_nodes[i].push_back(p);
          if (fx > nodes.x0 && fx < nodes.x1 && fy > nodes.y0 && fy < nodes.y1)
            g.omega_interior_nodes[i].push_back(p);
        }
    }
  }
  return g;
}

std::pair<std::vector<int>, std::vector<int>> neighborhood_fine_dofs(
    const StructuredGrids& grids, int i) {
  if (i < 0 || i >= grids.n_coarse_nodes)
    throw std::invalid_argument("neighborhood_fine_dofs: coarse node index out of range");
  return {grids.omega_nodes[i], grids.omega_interior_nodes[i]};
}

}  // namespace gmsfem
