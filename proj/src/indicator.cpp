#include "gmsfem/indicator.hpp"

#include <cmath>

#include "gmsfem/parallel.hpp"

namespace gmsfem {

namespace {

// fine-grid residual F - A u_off with domain-boundary entries zeroed
DenseVector residual_vector(const StructuredGrids& grids, const SparseMatrix& A,
                            const DenseVector& F, const DenseVector& u_off,
                            bool include_load) {
  DenseVector r = A.multiply(u_off);
  for (int p = 0; p < A.n; ++p) {
    r[p] = include_load ? F[p] - r[p] : -r[p];
    if (grids.boundary_node[p]) r[p] = 0.0;
  }
  return r;
}

DenseVector prolong(const StructuredGrids& grids, const OfflineSpace& offline,
                    const DenseVector& U0) {
  DenseVector u(grids.n_fine_nodes, 0.0);
  for (const auto& blk : offline.space.blocks) {
    const auto& nodes = grids.omega_nodes[blk.node];
    for (int a = 0; a < blk.count; ++a) {
      const double c = U0[blk.offset + a];
      if (c == 0.0) continue;
      const DenseVector& col = offline.space.cols[blk.offset + a];
      for (size_t l = 0; l < nodes.size(); ++l) u[nodes[l]] += c * col[l];
    }
  }
  return u;
}

}  // namespace

IndicatorReport indicator_l2(const StructuredGrids& grids, const CoefficientField& field,
                             const PartitionOfUnity& pou, const OfflineSpace& offline,
                             const SparseMatrix& A, const DenseVector& F,
                             const DenseVector& U0, const std::vector<NeighborhoodSpace>& spaces,
                             QFormula formula) {
  const DenseVector u_off = prolong(grids, offline, U0);
  const DenseVector r =
      residual_vector(grids, A, F, u_off, formula == QFormula::consistent);

  IndicatorReport rep;
  rep.kind = IndicatorKind::l2;
  rep.eta2.assign(spaces.size(), 0.0);
  rep.lambda_next.assign(spaces.size(), -1.0);
  rep.saturated.assign(spaces.size(), 0);

  parallel_for(spaces.size(), [&](size_t s) {
    const auto& sp = spaces[s];
    const int i = sp.node;
    if (sp.saturated()) {
      rep.saturated[i] = 1;
      return;
    }
    const auto& nodes = grids.omega_nodes[i];
    double q2 = 0.0;
    for (size_t l = 0; l < nodes.size(); ++l) {
      const double w = pou.chi[i][l] * r[nodes[l]];
      q2 += w * w;
    }
    const double lam = sp.lambda_next();
    rep.lambda_next[i] = lam;
    rep.eta2[i] = q2 / (field.kappa_tilde_min[i] * lam);
  });
  return rep;
}

IndicatorReport indicator_h1w(const StructuredGrids& grids, const CoefficientField& field,
                              const PartitionOfUnity& pou, const OfflineSpace& offline,
                              const SparseMatrix& A, const DenseVector& F,
                              const DenseVector& U0, const std::vector<NeighborhoodSpace>& spaces,
                              bool use_snapshot_space) {
  const DenseVector u_off = prolong(grids, offline, U0);
  const DenseVector r = residual_vector(grids, A, F, u_off, true);

  IndicatorReport rep;
  rep.kind = use_snapshot_space ? IndicatorKind::h1w_snap : IndicatorKind::h1w;
  rep.eta2.assign(spaces.size(), 0.0);
  rep.lambda_next.assign(spaces.size(), -1.0);
  rep.saturated.assign(spaces.size(), 0);

  parallel_for(spaces.size(), [&](size_t s) {
    const auto& sp = spaces[s];
    const int i = sp.node;
    if (sp.saturated()) {
      rep.saturated[i] = 1;
      return;
    }
    const double lam = sp.lambda_next();
    rep.lambda_next[i] = lam;

    const auto& nodes = grids.omega_nodes[i];
    double rnorm2;  // ||R_i||_{V_i*}^2

    if (!use_snapshot_space) {
      PatchSolver solver(grids, field.kappa, grids.omega_fine_cells[i], nodes,
                         grids.omega_node_rect[i]);
      DenseVector rhs(solver.interior.size());
      for (size_t a = 0; a < solver.interior.size(); ++a)
        rhs[a] = r[nodes[solver.interior[a]]];
      const DenseVector z = solver.solve_zero_boundary(rhs);
      double e = 0.0;
      for (size_t a = 0; a < solver.interior.size(); ++a)
        e += z[solver.interior[a]] * rhs[a];
      rnorm2 = e;
    } else {
      // trial/test space: chi_i-multiplied snapshots (zero trace on the
      // neighborhood boundary after domain-boundary masking)
      const int P = static_cast<int>(nodes.size());
      const int W = sp.snapshots.count();
      DenseMatrix B(P, W);
      for (int p = 0; p < P; ++p) {
        const double w = grids.boundary_node[nodes[p]] ? 0.0 : pou.chi[i][p];
        for (int j = 0; j < W; ++j) B(p, j) = w * sp.snapshots.R(p, j);
      }
      const DenseMatrix A_patch =
          assemble_dense(grids, field.kappa, grids.omega_fine_cells[i], nodes, true);

      DenseMatrix T(P, W);
      for (int p = 0; p < P; ++p)
        for (int q = 0; q < P; ++q) {
          const double m = A_patch(p, q);
          if (m == 0.0) continue;
          for (int j = 0; j < W; ++j) T(p, j) += m * B(q, j);
        }
      DenseMatrix G(W, W);
      for (int j = 0; j < W; ++j)
        for (int p = 0; p < P; ++p) {
          const double b = B(p, j);
          if (b == 0.0) continue;
          for (int k = 0; k < W; ++k) G(j, k) += b * T(p, k);
        }

      DenseVector g(W, 0.0);
      for (int j = 0; j < W; ++j)
        for (int p = 0; p < P; ++p) g[j] += B(p, j) * r[nodes[p]];

      const PivotedCholesky chol = pivoted_cholesky(std::move(G), 1e-12);
      const DenseVector c = pivoted_solve(chol, g);
      rnorm2 = dot(c, g);
    }

    rep.eta2[i] = std::max(0.0, rnorm2) / lam;
  });
  return rep;
}

DenseVector local_energy_error2(const StructuredGrids& grids, const CoefficientField& field,
                                const DenseVector& u, const DenseVector& u_off) {
  DenseVector e(grids.n_fine_nodes);
  for (int p = 0; p < grids.n_fine_nodes; ++p) e[p] = u[p] - u_off[p];

  // local energies per fine cell, then summed per neighborhood
  DenseVector cell_energy(grids.n_fine_cells, 0.0);
  parallel_for(grids.n_fine_cells, [&](size_t c) {
    const auto [cx, cy] = grids.fine_cell_xy(static_cast<int>(c));
    const int nd[4] = {grids.fine_node(cx, cy), grids.fine_node(cx + 1, cy),
                       grids.fine_node(cx + 1, cy + 1), grids.fine_node(cx, cy + 1)};
    const auto k = element_stiffness(grids.hx, grids.hy, field.kappa[c]);
    double s = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) s += e[nd[a]] * k[a * 4 + b] * e[nd[b]];
    cell_energy[c] = s;
  });

  DenseVector out(grids.n_coarse_nodes, 0.0);
  for (int i = 0; i < grids.n_coarse_nodes; ++i) {
    double s = 0.0;
    for (int c : grids.omega_fine_cells[i]) s += cell_energy[c];
    out[i] = std::max(0.0, s);
  }
  return out;
}

IndicatorReport indicator_exact(const StructuredGrids& grids, const CoefficientField& field,
                                const DenseVector& u, const DenseVector& u_off,
                                const std::vector<NeighborhoodSpace>& spaces) {
  const DenseVector local = local_energy_error2(grids, field, u, u_off);

  IndicatorReport rep;
  rep.kind = IndicatorKind::exact;
  rep.eta2.assign(spaces.size(), 0.0);
  rep.lambda_next.assign(spaces.size(), -1.0);
  rep.saturated.assign(spaces.size(), 0);
  for (const auto& sp : spaces) {
    if (sp.saturated()) {
      rep.saturated[sp.node] = 1;
      continue;
    }
    rep.eta2[sp.node] = local[sp.node];
  }
  return rep;
}

}  // namespace gmsfem
