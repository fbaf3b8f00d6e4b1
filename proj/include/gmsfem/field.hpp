#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmsfem/grid.hpp"
#include "gmsfem/linalg.hpp"

namespace gmsfem {

struct PartitionOfUnity;  // localspaces.hpp

enum class FieldKind { uniform, file, channels };

/// How to obtain the permeability field kappa.
struct FieldSpec {
  FieldKind kind = FieldKind::uniform;
  double contrast = 1.0;  // inclusion / background ratio, >= 1
  std::string path;       // for FieldKind::file
  std::uint64_t seed = 1; // placement seed for FieldKind::channels
};

/// Piecewise-constant permeability kappa per fine cell, and the spectral
/// weight kappa_tilde = kappa * sum_i H^2 |grad chi_i|^2 once the partition
/// of unity is available.
struct CoefficientField {
  DenseVector kappa;             // per fine cell, > 0
  DenseVector kappa_tilde;       // per fine cell; empty until computed
  DenseVector kappa_tilde_min;   // per coarse node: min over omega_i cells

  bool has_tilde() const { return !kappa_tilde.empty(); }
};

CoefficientField load_field(const FieldSpec& spec, const StructuredGrids& grids);

/// Inclusion mask of the synthetic crossing-channels field (1 = inclusion).
/// Deterministic in (grid geometry, seed).
std::vector<std::uint8_t> channel_mask(const StructuredGrids& grids, std::uint64_t seed);

/// Populate kappa_tilde and the per-neighborhood minima. The gradient of
/// each chi_i is taken from its bilinear interpolant at the cell center.
void compute_kappa_tilde(CoefficientField& field, const StructuredGrids& grids,
                         const PartitionOfUnity& pou);

}  // namespace gmsfem
