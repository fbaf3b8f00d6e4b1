#pragma once

#include <cstdint>
#include <utility>

#include "gmsfem/localspaces.hpp"

namespace gmsfem {

/// A set of fine-grid column vectors grouped by coarse node, each supported
/// on that node's closed neighborhood and vanishing on the domain boundary.
/// This is the operator R_0^T: columns are the coarse basis functions in
/// fine-grid nodal coordinates.
struct ProductSpace {
  struct Block {
    int node = -1;
    int offset = 0;  // first column index of this node
    int count = 0;
  };
  std::vector<Block> blocks;
  std::vector<DenseVector> cols;  // aligned with grids.omega_nodes[block.node]
  int dim = 0;

  int node_of_column(int c) const;
};

/// Global offline space: chi_i * psi_k^off for k < l_i, columns ordered by
/// coarse node then eigenvalue index.
struct OfflineSpace {
  ProductSpace space;
  std::vector<std::pair<int, int>> provenance;  // (coarse node, eigen index)
  std::vector<int> counts_per_node;
  int dim() const { return space.dim; }
};

OfflineSpace build_offline_space(const StructuredGrids& grids, const PartitionOfUnity& pou,
                                 const std::vector<NeighborhoodSpace>& spaces);

/// chi_i times every snapshot of every neighborhood: the saturation limit
/// of the enrichment, used for the snapshot solution u_snap.
ProductSpace build_snapshot_product_space(const StructuredGrids& grids,
                                          const PartitionOfUnity& pou,
                                          const std::vector<NeighborhoodSpace>& spaces);

struct CoarseSolveResult {
  DenseVector U0;                  // coefficients, 0 for dropped columns
  DenseVector u;                   // prolonged fine-grid solution
  std::vector<std::uint8_t> kept;  // near-duplicate columns are dropped
  double galerkin_residual_inf = 0.0;
  int dropped = 0;
};

/// Galerkin solve in the span of the columns: A0 = R0 A R0^T, F0 = R0 F,
/// then u = R0^T U0. Rank-deficient Gram pivots below 1e-12 of their
/// original diagonal are dropped.
CoarseSolveResult solve_coarse(const StructuredGrids& grids, const ProductSpace& space,
                               const SparseMatrix& A, const DenseVector& F);

double energy_norm(const SparseMatrix& A, const DenseVector& v);
double weighted_l2_norm(const SparseMatrix& S, const DenseVector& v);

/// Fine, snapshot and offline solutions plus the coarse coefficients.
struct Solutions {
  DenseVector u;
  DenseVector u_snap;
  DenseVector u_off;
  DenseVector U0;
};

/// The four relative errors, in percent.
struct RelativeErrors {
  double l2_vs_u = 0, h1_vs_u = 0;
  double l2_vs_usnap = 0, h1_vs_usnap = 0;
};

RelativeErrors relative_errors(const Solutions& sol, const SparseMatrix& A,
                               const SparseMatrix& S);

}  // namespace gmsfem
