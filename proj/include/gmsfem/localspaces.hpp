#pragma once

#include "gmsfem/fem.hpp"
#include "gmsfem/field.hpp"
#include "gmsfem/grid.hpp"
#include "gmsfem/linalg.hpp"

namespace gmsfem {

/// Multiscale partition of unity: chi[i] holds the nodal values of chi_i
/// on the closed neighborhood of coarse node i, aligned with
/// grids.omega_nodes[i]. chi_i vanishes on the neighborhood boundary except
/// where that boundary lies on the domain boundary.
struct PartitionOfUnity {
  std::vector<DenseVector> chi;

  /// Value of chi_i at a global fine node (0 outside the neighborhood).
  double at(const StructuredGrids& grids, int i, int fine_node) const {
    const auto [fx, fy] = grids.fine_node_xy(fine_node);
    const int l = StructuredGrids::local_index(grids.omega_node_rect[i], fx, fy);
    return l < 0 ? 0.0 : chi[i][l];
  }
};

/// Solve the kappa-harmonic problem on each coarse cell with bilinear hat
/// boundary data per vertex and stitch the per-cell solutions into chi_i.
PartitionOfUnity build_pou(const StructuredGrids& grids, const CoefficientField& field);

enum class SnapshotFamily { harmonic, nodal };

/// Per-neighborhood snapshot matrix: column j is a fine-grid function on
/// the closed neighborhood, aligned with grids.omega_nodes[i].
struct SnapshotSet {
  int node = -1;
  SnapshotFamily family = SnapshotFamily::harmonic;
  DenseMatrix R;  // (#patch nodes) x W_i
  int count() const { return R.cols; }
};

/// One kappa-harmonic extension per fine boundary node of the neighborhood
/// (nodes on the domain boundary included).
SnapshotSet build_snapshots_harmonic(const StructuredGrids& grids,
                                     const CoefficientField& field, int i);

/// Unit nodal vectors for every neighborhood node not on the domain boundary.
SnapshotSet build_snapshots_nodal(const StructuredGrids& grids, int i);

/// Local spectral data of one neighborhood: the snapshot-space projections
/// A_off = R^T A R and S_off = R^T S R of the neighborhood stiffness/mass,
/// their full eigendecomposition, the offline eigenfunctions in fine
/// coordinates, and the number of active eigenfunctions.
struct NeighborhoodSpace {
  int node = -1;
  SnapshotSet snapshots;
  DenseMatrix A_off, S_off;
  EigenPairs eig;
  DenseMatrix psi_off;  // (#patch nodes) x W_i, column k = offline function k
  int active = 0;       // l_i
  bool saturated() const { return active >= snapshots.count(); }

  /// Eigenvalue lambda_{l_i+1} used by the indicators; -1 when saturated.
  double lambda_next() const {
    return saturated() ? -1.0 : eig.values[active];
  }
};

/// Requires kappa_tilde to be populated.
NeighborhoodSpace build_neighborhood_space(const StructuredGrids& grids,
                                           const CoefficientField& field,
                                           SnapshotSet snapshots, int i,
                                           int initial_count);

/// Increase the active count by s, clamped to the snapshot count.
void enrich(NeighborhoodSpace& space, int s);

/// Smallest enrichment size per the spectral-gap rule: the first s with
/// lambda_{l+s+1} >= gap_ratio * lambda_{l+1}. gap_ratio <= 1 gives s = 1.
int enrichment_size(const NeighborhoodSpace& space, double gap_ratio, int s_default);

// --- shared local Dirichlet machinery (also used by the indicators) ---

/// Dense factorization of the interior block of a local stiffness matrix
/// over the cells of a node patch, for repeated Dirichlet solves.
struct PatchSolver {
  std::vector<int> nodes;      // global fine nodes, lexicographic
  std::vector<int> interior;   // positions into `nodes`
  std::vector<int> boundary;   // positions into `nodes`
  DenseMatrix A_patch;         // full patch stiffness, no elimination
  DenseMatrix L_interior;      // Cholesky factor of the interior block

  PatchSolver(const StructuredGrids& grids, const DenseVector& kappa,
              std::span<const int> cells, std::span<const int> nodes,
              const IndexRect& rect, const std::vector<char>& extra_boundary = {});

  /// Solve the local Dirichlet problem with the given boundary data
  /// (indexed like `boundary`); returns patch-aligned nodal values.
  DenseVector solve_with_boundary(const DenseVector& boundary_values) const;

  /// Solve with zero boundary data and the given interior right-hand side
  /// (indexed like `interior`).
  DenseVector solve_zero_boundary(const DenseVector& rhs_interior) const;
};

}  // namespace gmsfem
