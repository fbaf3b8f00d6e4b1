#include "gmsfem/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gmsfem/parallel.hpp"

namespace gmsfem {

int ProductSpace::node_of_column(int c) const {
  for (const auto& b : blocks)
    if (c >= b.offset && c < b.offset + b.count) return b.node;
  return -1;
}

namespace {

// column = chi_i .* v on the neighborhood patch, zeroed on the domain boundary
DenseVector masked_product(const StructuredGrids& grids, const PartitionOfUnity& pou, int i,
                           const DenseVector& v) {
  const auto& nodes = grids.omega_nodes[i];
  DenseVector col(nodes.size());
  for (size_t l = 0; l < nodes.size(); ++l)
    col[l] = grids.boundary_node[nodes[l]] ? 0.0 : pou.chi[i][l] * v[l];
  return col;
}

}  // namespace

OfflineSpace build_offline_space(const StructuredGrids& grids, const PartitionOfUnity& pou,
                                 const std::vector<NeighborhoodSpace>& spaces) {
  OfflineSpace off;
  off.counts_per_node.resize(spaces.size());
  int offset = 0;
  for (const auto& sp : spaces) {
    off.counts_per_node[sp.node] = sp.active;
    off.space.blocks.push_back({sp.node, offset, sp.active});
    offset += sp.active;
  }
  off.space.dim = offset;
  off.space.cols.resize(offset);
  off.provenance.resize(offset);

  parallel_for(spaces.size(), [&](size_t s) {
    const auto& sp = spaces[s];
    const auto& blk = off.space.blocks[s];
    for (int k = 0; k < sp.active; ++k) {
      off.space.cols[blk.offset + k] =
          masked_product(grids, pou, sp.node, sp.psi_off.column(k));
      off.provenance[blk.offset + k] = {sp.node, k};
    }
  });
  return off;
}

ProductSpace build_snapshot_product_space(const StructuredGrids& grids,
                                          const PartitionOfUnity& pou,
                                          const std::vector<NeighborhoodSpace>& spaces) {
  ProductSpace space;
  int offset = 0;
  for (const auto& sp : spaces) {
    space.blocks.push_back({sp.node, offset, sp.snapshots.count()});
    offset += sp.snapshots.count();
  }
  space.dim = offset;
  space.cols.resize(offset);

  parallel_for(spaces.size(), [&](size_t s) {
    const auto& sp = spaces[s];
    const auto& blk = space.blocks[s];
    for (int j = 0; j < blk.count; ++j)
      space.cols[blk.offset + j] =
          masked_product(grids, pou, sp.node, sp.snapshots.R.column(j));
  });
  return space;
}

namespace {

// columns of two coarse nodes can interact only if the nodes are lattice
// neighbors (supports overlapping in at least one cell)
bool nodes_coupled(const StructuredGrids& grids, int i, int j) {
  const auto [ix, iy] = grids.coarse_node_xy(i);
  const auto [jx, jy] = grids.coarse_node_xy(j);
  return std::abs(ix - jx) <= 1 && std::abs(iy - jy) <= 1;
}

}  // namespace

CoarseSolveResult solve_coarse(const StructuredGrids& grids, const ProductSpace& space,
                               const SparseMatrix& A, const DenseVector& F) {
  const int n = space.dim;
  const int nblocks = static_cast<int>(space.blocks.size());

  DenseMatrix A0(n, n);
  DenseVector F0(n, 0.0);

  // per-column A * col, scattered over the patch plus one ring
  std::vector<DenseVector> scratch;
  const int workers = std::max(1, worker_count());
  scratch.assign(workers, DenseVector(A.n, 0.0));
  std::vector<std::vector<int>> touched(workers);

#ifdef _OPENMP
  const bool par = parallel_enabled();
#else
  const bool par = false;
#endif

  auto process_block = [&](int bi, DenseVector& y, std::vector<int>& touch) {
    const auto& blk = space.blocks[bi];
    const auto& nodes_i = grids.omega_nodes[blk.node];
    for (int a = 0; a < blk.count; ++a) {
      const int c = blk.offset + a;
      const DenseVector& col = space.cols[c];

      touch.clear();
      for (size_t l = 0; l < nodes_i.size(); ++l) {
        const double x = col[l];
        if (x == 0.0) continue;
        const int row = nodes_i[l];
        for (int k = A.row_ptr[row]; k < A.row_ptr[row + 1]; ++k) {
          const int p = A.col[k];
          if (y[p] == 0.0) touch.push_back(p);
          y[p] += A.val[k] * x;
        }
      }

      double f0 = 0.0;
      for (size_t l = 0; l < nodes_i.size(); ++l) f0 += col[l] * F[nodes_i[l]];
      F0[c] = f0;

      for (int bj = 0; bj <= bi; ++bj) {
        const auto& blj = space.blocks[bj];
        if (!nodes_coupled(grids, blk.node, blj.node)) continue;
        const auto& nodes_j = grids.omega_nodes[blj.node];
        for (int b = 0; b < blj.count; ++b) {
          const int d = blj.offset + b;
          if (d > c) continue;
          double g = 0.0;
          const DenseVector& cold = space.cols[d];
          for (size_t l = 0; l < nodes_j.size(); ++l) g += cold[l] * y[nodes_j[l]];
          A0(c, d) = g;
          A0(d, c) = g;
        }
      }

      for (int p : touch) y[p] = 0.0;
    }
  };

  if (par) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int bi = 0; bi < nblocks; ++bi) {
#ifdef _OPENMP
      const int w = omp_get_thread_num();
#else
      const int w = 0;
#endif
      process_block(bi, scratch[w], touched[w]);
    }
  } else {
    for (int bi = 0; bi < nblocks; ++bi) process_block(bi, scratch[0], touched[0]);
  }

  CoarseSolveResult res;
  const PivotedCholesky F0_chol = pivoted_cholesky(std::move(A0), 1e-12);
  res.kept = F0_chol.kept;
  res.U0 = pivoted_solve(F0_chol, F0);
  res.dropped = F0_chol.dropped();

  // prolong to the fine grid
  res.u.assign(A.n, 0.0);
  for (int bi = 0; bi < nblocks; ++bi) {
    const auto& blk = space.blocks[bi];
    const auto& nodes_i = grids.omega_nodes[blk.node];
    for (int a = 0; a < blk.count; ++a) {
      const double coeff = res.U0[blk.offset + a];
      if (coeff == 0.0) continue;
      const DenseVector& col = space.cols[blk.offset + a];
      for (size_t l = 0; l < nodes_i.size(); ++l) res.u[nodes_i[l]] += coeff * col[l];
    }
  }

  // Galerkin orthogonality diagnostic
  DenseVector r = A.multiply(res.u);
  for (int p = 0; p < A.n; ++p) r[p] = F[p] - r[p];
  double worst = 0.0;
  for (int bi = 0; bi < nblocks; ++bi) {
    const auto& blk = space.blocks[bi];
    const auto& nodes_i = grids.omega_nodes[blk.node];
    for (int a = 0; a < blk.count; ++a) {
      double g = 0.0;
      const DenseVector& col = space.cols[blk.offset + a];
      for (size_t l = 0; l < nodes_i.size(); ++l) g += col[l] * r[nodes_i[l]];
      worst = std::max(worst, std::abs(g));
    }
  }
  res.galerkin_residual_inf = worst;
  return res;
}

double energy_norm(const SparseMatrix& A, const DenseVector& v) {
  return std::sqrt(std::max(0.0, dot(v, A.multiply(v))));
}

double weighted_l2_norm(const SparseMatrix& S, const DenseVector& v) {
  return std::sqrt(std::max(0.0, dot(v, S.multiply(v))));
}

namespace {

DenseVector diff(const DenseVector& a, const DenseVector& b) {
  DenseVector d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

RelativeErrors relative_errors(const Solutions& sol, const SparseMatrix& A,
                               const SparseMatrix& S) {
  RelativeErrors e;
  const DenseVector du = diff(sol.u, sol.u_off);
  const DenseVector ds = diff(sol.u_snap, sol.u_off);
  const double nu_l2 = weighted_l2_norm(S, sol.u);
  const double nu_h1 = energy_norm(A, sol.u);
  const double ns_l2 = weighted_l2_norm(S, sol.u_snap);
  const double ns_h1 = energy_norm(A, sol.u_snap);
  e.l2_vs_u = nu_l2 > 0 ? 100.0 * weighted_l2_norm(S, du) / nu_l2 : 0.0;
  e.h1_vs_u = nu_h1 > 0 ? 100.0 * energy_norm(A, du) / nu_h1 : 0.0;
  e.l2_vs_usnap = ns_l2 > 0 ? 100.0 * weighted_l2_norm(S, ds) / ns_l2 : 0.0;
  e.h1_vs_usnap = ns_h1 > 0 ? 100.0 * energy_norm(A, ds) / ns_h1 : 0.0;
  return e;
}

}  // namespace gmsfem
