#pragma once

#include <array>
#include <limits>
#include <string>

#include "gmsfem/coarse.hpp"
#include "gmsfem/indicator.hpp"

namespace gmsfem {

enum class TerminationRule { exact_fraction, error_target, indicator_tol, max_dim, max_iter };

struct AdaptConfig {
  double theta = 0.7;
  IndicatorKind indicator = IndicatorKind::h1w;
  SnapshotFamily snapshots = SnapshotFamily::harmonic;
  int initial_basis = 0;  // 0 = family default (4 harmonic, 2 nodal)
  int add_per_mark = 1;   // basis functions added per marked region
  double gap_ratio = 1.0; // >1 enables the spectral-gap enrichment rule

  TerminationRule terminate = TerminationRule::exact_fraction;
  double exact_fraction_p = 0.05;  // stop when ||u-u_off|| <= (1+p) ||u-u_snap||
  bool literal_fraction = false;   // literal reading: <= p ||u-u_snap||
  double error_target = 0.10;      // stop when ||u-u_off|| <= q ||u||
  double indicator_tol = 1e-8;     // stop when sum eta^2 <= tol * initial sum
  int max_dim = std::numeric_limits<int>::max();
  int max_iter = 100;

  double f_const = 1.0;
  QFormula q_formula = QFormula::consistent;
  std::array<double, 3> lift{0.0, 0.0, 0.0};  // affine boundary lifting a+bx+cy

  int resolved_initial_basis() const {
    if (initial_basis > 0) return initial_basis;
    return snapshots == SnapshotFamily::harmonic ? 4 : 2;
  }
  void validate() const;  // throws std::invalid_argument naming the field
};

struct IterationRecord {
  int iteration = 0;
  int dim = 0;
  RelativeErrors errors;
  double sum_eta2 = 0.0;
  int marked = 0;
  double seconds = 0.0;
  double galerkin_residual_inf = 0.0;
  double energy_error_u = 0.0;      // ||u - u_off||_V
  double energy_error_usnap = 0.0;  // ||u_snap - u_off||_V
  std::vector<int> basis_counts;    // per coarse node
  DenseVector exact_eta2;           // per coarse node local energy error
};

struct ConvergenceHistory {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  std::string termination;  // rule that fired

  int final_dim() const { return iterations.empty() ? 0 : iterations.back().dim; }
  const IterationRecord& last() const { return iterations.back(); }
};

/// Dorfler-style bulk marking: the smallest set of unsaturated regions,
/// taken in decreasing eta^2 order (ties by ascending node index), whose
/// sum reaches theta times the unsaturated total. Empty when nothing is
/// enrichable.
std::vector<int> mark(const IndicatorReport& report, double theta);

/// Owns the grid-level state shared by adaptive and uniform runs: the
/// partition of unity, kappa_tilde, fine matrices, the fine solution and
/// the snapshot solution. Runs reset the per-neighborhood counts, so one
/// driver can serve several configurations on the same field and snapshot
/// family.
class Driver {
 public:
  Driver(const StructuredGrids& grids, const CoefficientField& field_kappa_only,
         const AdaptConfig& base);

  ConvergenceHistory run_adaptive(const AdaptConfig& cfg);
  ConvergenceHistory run_uniform(const AdaptConfig& cfg, int per_node_count);

  const StructuredGrids& grids() const { return grids_; }
  const CoefficientField& field() const { return field_; }
  const PartitionOfUnity& pou() const { return pou_; }
  const std::vector<NeighborhoodSpace>& spaces() const { return spaces_; }
  const SparseMatrix& stiffness() const { return A_elim_; }
  const SparseMatrix& stiffness_raw() const { return A_raw_; }
  const SparseMatrix& mass() const { return S_; }
  const DenseVector& load() const { return F_; }
  const DenseVector& fine_solution() const { return u_full_; }
  const DenseVector& snapshot_solution() const { return u_snap_full_; }
  double snapshot_floor() const { return floor_energy_; }

 private:
  IterationRecord make_record(const AdaptConfig& cfg, int iteration,
                              const OfflineSpace& off, const CoarseSolveResult& sol,
                              IndicatorReport& report);
  void reset_counts(int count);

  StructuredGrids grids_;
  CoefficientField field_;
  AdaptConfig base_;
  PartitionOfUnity pou_;
  std::vector<NeighborhoodSpace> spaces_;
  SparseMatrix A_elim_, A_raw_, S_;
  DenseVector F_;        // load with boundary rows zeroed (lifting applied)
  DenseVector lift_;     // nodal affine lifting, all zeros by default
  DenseVector u_h_;      // homogeneous fine solution
  DenseVector u_full_;   // u_h + lifting
  DenseVector u_snap_h_, u_snap_full_;
  double floor_energy_ = 0.0;  // ||u - u_snap||_V
};

ConvergenceHistory run_adaptive(const AdaptConfig& cfg, const StructuredGrids& grids,
                                const CoefficientField& field);
ConvergenceHistory run_uniform(const AdaptConfig& cfg, const StructuredGrids& grids,
                               const CoefficientField& field, int per_node_count);

}  // namespace gmsfem
