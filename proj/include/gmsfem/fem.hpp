#pragma once

#include <array>
#include <span>

#include "gmsfem/field.hpp"
#include "gmsfem/grid.hpp"
#include "gmsfem/linalg.hpp"

namespace gmsfem {

/// Q1 element matrices on an hx-by-hy rectangle, node order SW, SE, NE, NW.
/// Coefficients are constant per cell, so the integrals are exact.
std::array<double, 16> element_stiffness(double hx, double hy, double kappa);
std::array<double, 16> element_mass(double hx, double hy, double kappa_tilde);

/// Assemble the stiffness matrix over the given fine cells with per-cell
/// kappa. Rows/columns of dirichlet_nodes are eliminated symmetrically
/// (unit diagonal, zero off-diagonals); the caller adjusts the RHS.
SparseMatrix assemble_stiffness(const StructuredGrids& grids, const CoefficientField& field,
                                std::span<const int> cells,
                                std::span<const int> dirichlet_nodes);

/// Weighted mass matrix over the given cells with per-cell kappa_tilde.
/// Requires compute_kappa_tilde to have run.
SparseMatrix assemble_weighted_mass(const StructuredGrids& grids, const CoefficientField& field,
                                    std::span<const int> cells);

/// Load vector for a constant forcing term over the given cells.
DenseVector assemble_load(const StructuredGrids& grids, double f_const,
                          std::span<const int> cells);

/// Dense stiffness/mass over a set of cells, restricted to the nodes listed
/// in `nodes` (values per fine cell taken from `coeff`). Used for the local
/// neighborhood problems.
DenseMatrix assemble_dense(const StructuredGrids& grids, const DenseVector& coeff,
                           std::span<const int> cells, std::span<const int> nodes,
                           bool stiffness);

}  // namespace gmsfem
