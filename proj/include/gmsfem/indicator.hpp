#pragma once

#include "gmsfem/coarse.hpp"
#include "gmsfem/localspaces.hpp"

namespace gmsfem {

enum class IndicatorKind { l2, h1w, h1w_snap, exact };

enum class QFormula {
  consistent,  // residual includes the load: || W_i (F - A R0^T U0) ||
  paper        // load term omitted:          || W_i A R0^T U0 ||
};

/// One nonnegative squared indicator value per coarse node. Saturated
/// neighborhoods (all eigenfunctions in use) carry eta2 = 0 and a flag.
struct IndicatorReport {
  IndicatorKind kind = IndicatorKind::h1w;
  DenseVector eta2;
  DenseVector lambda_next;          // lambda_{l_i+1} used, -1 when saturated
  std::vector<std::uint8_t> saturated;

  double total() const {
    double s = 0.0;
    for (double v : eta2) s += v;
    return s;
  }
};

/// eta_i^2 = ||W_i (F - A u_off)||_2^2 / (kappa_tilde_i * lambda_{l_i+1}),
/// where W_i is the diagonal of chi_i nodal values and the residual is
/// zeroed on the domain boundary.
IndicatorReport indicator_l2(const StructuredGrids& grids, const CoefficientField& field,
                             const PartitionOfUnity& pou, const OfflineSpace& offline,
                             const SparseMatrix& A, const DenseVector& F,
                             const DenseVector& U0, const std::vector<NeighborhoodSpace>& spaces,
                             QFormula formula = QFormula::consistent);

/// eta_i^2 = ||R_i||_{V_i*}^2 / lambda_{l_i+1} with the Riesz representer
/// z_i solved on the zero-trace interior of omega_i; with use_snapshot_space
/// the same variational problem is solved in span{chi_i psi_j^snap}.
IndicatorReport indicator_h1w(const StructuredGrids& grids, const CoefficientField& field,
                              const PartitionOfUnity& pou, const OfflineSpace& offline,
                              const SparseMatrix& A, const DenseVector& F,
                              const DenseVector& U0, const std::vector<NeighborhoodSpace>& spaces,
                              bool use_snapshot_space);

/// eta_i^2 = |u - u_off|^2 in the local energy over omega_i's cells.
IndicatorReport indicator_exact(const StructuredGrids& grids, const CoefficientField& field,
                                const DenseVector& u, const DenseVector& u_off,
                                const std::vector<NeighborhoodSpace>& spaces);

/// Per-coarse-node local energy (v^T A_omega v over omega_i's cells),
/// without saturation zeroing; feeds the convergence-history error grids.
DenseVector local_energy_error2(const StructuredGrids& grids, const CoefficientField& field,
                                const DenseVector& u, const DenseVector& u_off);

}  // namespace gmsfem
