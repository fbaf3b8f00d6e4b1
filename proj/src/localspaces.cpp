#include "gmsfem/localspaces.hpp"

#include <algorithm>
#include <stdexcept>

#include "gmsfem/parallel.hpp"

namespace gmsfem {

PatchSolver::PatchSolver(const StructuredGrids& grids, const DenseVector& kappa,
                         std::span<const int> cells, std::span<const int> patch_nodes,
                         const IndexRect& rect, const std::vector<char>& extra_boundary) {
  nodes.assign(patch_nodes.begin(), patch_nodes.end());
  for (size_t l = 0; l < nodes.size(); ++l) {
    const auto [fx, fy] = grids.fine_node_xy(nodes[l]);
    const bool extra = !extra_boundary.empty() && extra_boundary[nodes[l]];
    if (rect.on_perimeter(fx, fy) || extra)
      boundary.push_back(static_cast<int>(l));
    else
      interior.push_back(static_cast<int>(l));
  }

  A_patch = assemble_dense(grids, kappa, cells, nodes, /*stiffness=*/true);

  const int ni = static_cast<int>(interior.size());
  L_interior = DenseMatrix(ni, ni);
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < ni; ++b) L_interior(a, b) = A_patch(interior[a], interior[b]);
  if (ni > 0 && cholesky_factor(L_interior) >= 0)
    throw SolverError("PatchSolver: local stiffness is not positive definite");
}

namespace {

// one step of iterative refinement keeps stitched solutions consistent to
// machine precision even at high contrast
void refine(const DenseMatrix& A_patch, const std::vector<int>& interior,
            const DenseMatrix& L, const DenseVector& rhs, DenseVector& u_interior) {
  const int ni = static_cast<int>(interior.size());
  DenseVector r(ni);
  for (int a = 0; a < ni; ++a) {
    double s = rhs[a];
    for (int b = 0; b < ni; ++b) s -= A_patch(interior[a], interior[b]) * u_interior[b];
    r[a] = s;
  }
  cholesky_solve(L, r);
  for (int a = 0; a < ni; ++a) u_interior[a] += r[a];
}

}  // namespace

DenseVector PatchSolver::solve_with_boundary(const DenseVector& boundary_values) const {
  const int ni = static_cast<int>(interior.size());
  const int nb = static_cast<int>(boundary.size());

  DenseVector rhs(ni, 0.0);
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < nb; ++b)
      rhs[a] -= A_patch(interior[a], boundary[b]) * boundary_values[b];

  DenseVector ui = rhs;
  if (ni > 0) {
    cholesky_solve(L_interior, ui);
    refine(A_patch, interior, L_interior, rhs, ui);
  }

  DenseVector u(nodes.size(), 0.0);
  for (int b = 0; b < nb; ++b) u[boundary[b]] = boundary_values[b];
  for (int a = 0; a < ni; ++a) u[interior[a]] = ui[a];
  return u;
}

DenseVector PatchSolver::solve_zero_boundary(const DenseVector& rhs_interior) const {
  DenseVector ui = rhs_interior;
  if (!interior.empty()) {
    cholesky_solve(L_interior, ui);
    refine(A_patch, interior, L_interior, rhs_interior, ui);
  }
  DenseVector u(nodes.size(), 0.0);
  for (size_t a = 0; a < interior.size(); ++a) u[interior[a]] = ui[a];
  return u;
}

PartitionOfUnity build_pou(const StructuredGrids& grids, const CoefficientField& field) {
  const int n_cells_coarse = grids.nx_coarse * grids.ny_coarse;

  // per coarse cell: the four vertex hat solutions on the cell's subgrid
  std::vector<std::array<DenseVector, 4>> cell_sol(n_cells_coarse);
  std::vector<std::vector<int>> cell_nodes(n_cells_coarse);
  std::vector<IndexRect> cell_rect(n_cells_coarse);

  parallel_for(n_cells_coarse, [&](size_t kc) {
    const int kx = static_cast<int>(kc) % grids.nx_coarse;
    const int ky = static_cast<int>(kc) / grids.nx_coarse;

    IndexRect rect;
    rect.x0 = kx * grids.nx_sub;
    rect.x1 = (kx + 1) * grids.nx_sub;
    rect.y0 = ky * grids.ny_sub;
    rect.y1 = (ky + 1) * grids.ny_sub;
    cell_rect[kc] = rect;

    std::vector<int> nodes;
    std::vector<int> cells;
    for (int fy = rect.y0; fy <= rect.y1; ++fy)
      for (int fx = rect.x0; fx <= rect.x1; ++fx) nodes.push_back(grids.fine_node(fx, fy));
    for (int fy = rect.y0; fy < rect.y1; ++fy)
      for (int fx = rect.x0; fx < rect.x1; ++fx) cells.push_back(grids.fine_cell(fx, fy));
    cell_nodes[kc] = nodes;

    PatchSolver solver(grids, field.kappa, cells, nodes, rect);

    // bilinear hat data for each of the four vertices: SW, SE, NE, NW
    for (int v = 0; v < 4; ++v) {
      DenseVector data(solver.boundary.size());
      for (size_t b = 0; b < solver.boundary.size(); ++b) {
        const auto [fx, fy] = grids.fine_node_xy(nodes[solver.boundary[b]]);
        const double xi = static_cast<double>(fx - rect.x0) / grids.nx_sub;
        const double eta = static_cast<double>(fy - rect.y0) / grids.ny_sub;
        switch (v) {
          case 0: data[b] = (1.0 - xi) * (1.0 - eta); break;
          case 1: data[b] = xi * (1.0 - eta); break;
          case 2: data[b] = xi * eta; break;
          default: data[b] = (1.0 - xi) * eta; break;
        }
      }
      cell_sol[kc][v] = solver.solve_with_boundary(data);
    }
  });

  PartitionOfUnity pou;
  pou.chi.resize(grids.n_coarse_nodes);
  parallel_for(grids.n_coarse_nodes, [&](size_t i) {
    const auto& rect = grids.omega_node_rect[i];
    DenseVector chi(rect.count(), 0.0);
    const auto [cx, cy] = grids.coarse_node_xy(static_cast<int>(i));
    for (int kc : grids.omega_coarse_cells[i]) {
      const int kx = kc % grids.nx_coarse;
      const int ky = kc / grids.nx_coarse;
      // which corner of this coarse cell is node i
      int v;
      if (cx == kx && cy == ky) v = 0;
      else if (cx == kx + 1 && cy == ky) v = 1;
      else if (cx == kx + 1 && cy == ky + 1) v = 2;
      else v = 3;

      const auto& sol = cell_sol[kc][v];
      const auto& nodes = cell_nodes[kc];
      for (size_t l = 0; l < nodes.size(); ++l) {
        const auto [fx, fy] = grids.fine_node_xy(nodes[l]);
        chi[StructuredGrids::local_index(rect, fx, fy)] = sol[l];
      }
    }
    pou.chi[i] = std::move(chi);
  });
  return pou;
}

SnapshotSet build_snapshots_harmonic(const StructuredGrids& grids, const CoefficientField& field,
                                     int i) {
  if (i < 0 || i >= grids.n_coarse_nodes)
    throw std::invalid_argument("build_snapshots_harmonic: node index out of range");

  const auto& nodes = grids.omega_nodes[i];
  PatchSolver solver(grids, field.kappa, grids.omega_fine_cells[i], nodes,
                     grids.omega_node_rect[i]);

  SnapshotSet snap;
  snap.node = i;
  snap.family = SnapshotFamily::harmonic;
  const int W = static_cast<int>(solver.boundary.size());
  snap.R = DenseMatrix(static_cast<int>(nodes.size()), W);

  DenseVector data(W, 0.0);
  for (int j = 0; j < W; ++j) {
    data[j] = 1.0;
    const DenseVector col = solver.solve_with_boundary(data);
    data[j] = 0.0;
    for (size_t l = 0; l < nodes.size(); ++l) snap.R(static_cast<int>(l), j) = col[l];
  }
  return snap;
}

SnapshotSet build_snapshots_nodal(const StructuredGrids& grids, int i) {
  if (i < 0 || i >= grids.n_coarse_nodes)
    throw std::invalid_argument("build_snapshots_nodal: node index out of range");

  const auto& nodes = grids.omega_nodes[i];
  std::vector<int> keep;
  for (size_t l = 0; l < nodes.size(); ++l)
    if (!grids.boundary_node[nodes[l]]) keep.push_back(static_cast<int>(l));

  SnapshotSet snap;
  snap.node = i;
  snap.family = SnapshotFamily::nodal;
  snap.R = DenseMatrix(static_cast<int>(nodes.size()), static_cast<int>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) snap.R(keep[j], static_cast<int>(j)) = 1.0;
  return snap;
}

NeighborhoodSpace build_neighborhood_space(const StructuredGrids& grids,
                                           const CoefficientField& field, SnapshotSet snapshots,
                                           int i, int initial_count) {
  if (!field.has_tilde())
    throw std::logic_error("build_neighborhood_space: kappa_tilde not yet computed");

  const auto& nodes = grids.omega_nodes[i];
  const auto& cells = grids.omega_fine_cells[i];
  const DenseMatrix A_patch = assemble_dense(grids, field.kappa, cells, nodes, true);
  const DenseMatrix S_patch = assemble_dense(grids, field.kappa_tilde, cells, nodes, false);

  const int P = static_cast<int>(nodes.size());
  const int W = snapshots.count();

  auto project = [&](const DenseMatrix& M) {
    DenseMatrix T(P, W);  // T = M R
    for (int p = 0; p < P; ++p)
      for (int q = 0; q < P; ++q) {
        const double m = M(p, q);
        if (m == 0.0) continue;
        for (int j = 0; j < W; ++j) T(p, j) += m * snapshots.R(q, j);
      }
    DenseMatrix out(W, W);  // out = R^T T
    for (int j = 0; j < W; ++j)
      for (int p = 0; p < P; ++p) {
        const double r = snapshots.R(p, j);
        if (r == 0.0) continue;
        for (int k = 0; k < W; ++k) out(j, k) += r * T(p, k);
      }
    return out;
  };

  NeighborhoodSpace space;
  space.node = i;
  space.A_off = project(A_patch);
  space.S_off = project(S_patch);
  space.eig = generalized_eig(space.A_off, space.S_off);

  space.psi_off = DenseMatrix(P, W);
  for (int p = 0; p < P; ++p)
    for (int j = 0; j < W; ++j) {
      double s = 0.0;
      for (int k = 0; k < W; ++k) s += snapshots.R(p, k) * space.eig.vectors(k, j);
      space.psi_off(p, j) = s;
    }

  space.snapshots = std::move(snapshots);
  space.active = W == 0 ? 0 : std::clamp(initial_count, 1, W);
  return space;
}

void enrich(NeighborhoodSpace& space, int s) {
  space.active = std::min(space.active + s, space.snapshots.count());
}

int enrichment_size(const NeighborhoodSpace& space, double gap_ratio, int s_default) {
  const int l = space.active;
  const int W = space.snapshots.count();
  if (gap_ratio <= 1.0) return s_default;
  const double base = space.eig.values[l];
  if (base <= 0.0) return s_default;
  for (int s = 1; l + s < W; ++s)
    if (space.eig.values[l + s] >= gap_ratio * base) return s;
  return W - l;  // no gap found: saturate
}

}  // namespace gmsfem
