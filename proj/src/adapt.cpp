#include "gmsfem/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gmsfem/parallel.hpp"

namespace gmsfem {

void AdaptConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("theta must lie strictly between 0 and 1");
  if (initial_basis < 0) throw std::invalid_argument("init-basis must be >= 0");
  if (add_per_mark < 1) throw std::invalid_argument("add-per-mark must be >= 1");
  if (!(exact_fraction_p > 0.0 && exact_fraction_p < 1.0))
    throw std::invalid_argument("exact-fraction p must lie strictly between 0 and 1");
  if (!(error_target > 0.0 && error_target < 1.0))
    throw std::invalid_argument("error-target must lie strictly between 0 and 1");
  if (indicator_tol <= 0.0) throw std::invalid_argument("indicator tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max-iter must be >= 1");
  if (max_dim < 1) throw std::invalid_argument("max-dim must be >= 1");
  if (gap_ratio <= 0.0) throw std::invalid_argument("gap-ratio must be > 0");
}

std::vector<int> mark(const IndicatorReport& report, double theta) {
  const int n = static_cast<int>(report.eta2.size());
  std::vector<int> order;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (report.saturated[i]) continue;
    order.push_back(i);
    total += report.eta2[i];
  }
  if (total <= 0.0) return {};

  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (report.eta2[a] != report.eta2[b]) return report.eta2[a] > report.eta2[b];
    return a < b;
  });

  std::vector<int> marked;
  double sum = 0.0;
  for (int i : order) {
    marked.push_back(i);
    sum += report.eta2[i];
    if (sum >= theta * total) break;
  }
  return marked;
}

namespace {

std::vector<int> all_cells(const StructuredGrids& g) {
  std::vector<int> c(g.n_fine_cells);
  std::iota(c.begin(), c.end(), 0);
  return c;
}

DenseVector affine_lift(const StructuredGrids& g, const std::array<double, 3>& abc) {
  DenseVector v(g.n_fine_nodes, 0.0);
  if (abc[0] == 0.0 && abc[1] == 0.0 && abc[2] == 0.0) return v;
  for (int fy = 0; fy <= g.ny_fine; ++fy)
    for (int fx = 0; fx <= g.nx_fine; ++fx)
      v[g.fine_node(fx, fy)] = abc[0] + abc[1] * g.node_x(fx) + abc[2] * g.node_y(fy);
  return v;
}

}  // namespace

Driver::Driver(const StructuredGrids& grids, const CoefficientField& field_kappa_only,
               const AdaptConfig& base)
    : grids_(grids), field_(field_kappa_only), base_(base) {
  base_.validate();

  pou_ = build_pou(grids_, field_);
  compute_kappa_tilde(field_, grids_, pou_);

  const auto cells = all_cells(grids_);
  const auto dirichlet = grids_.domain_boundary_nodes();
  A_elim_ = assemble_stiffness(grids_, field_, cells, dirichlet);
  A_raw_ = assemble_stiffness(grids_, field_, cells, {});
  S_ = assemble_weighted_mass(grids_, field_, cells);

  F_ = assemble_load(grids_, base_.f_const, cells);
  lift_ = affine_lift(grids_, base_.lift);
  const bool lifted = norm_inf(lift_) > 0.0;
  if (lifted) {
    const DenseVector Ag = A_raw_.multiply(lift_);
    for (int p = 0; p < grids_.n_fine_nodes; ++p) F_[p] -= Ag[p];
  }
  for (int p : dirichlet) F_[p] = 0.0;

  u_h_ = solve_spd(A_elim_, F_);
  u_full_ = u_h_;
  if (lifted) axpy(1.0, lift_, u_full_);

  // local spectral spaces, one per coarse node
  spaces_.resize(grids_.n_coarse_nodes);
  const int init = base_.resolved_initial_basis();
  parallel_for(grids_.n_coarse_nodes, [&](size_t i) {
    SnapshotSet snap = base_.snapshots == SnapshotFamily::harmonic
                           ? build_snapshots_harmonic(grids_, field_, static_cast<int>(i))
                           : build_snapshots_nodal(grids_, static_cast<int>(i));
    spaces_[i] = build_neighborhood_space(grids_, field_, std::move(snap),
                                          static_cast<int>(i), init);
  });

  // snapshot solution: the saturation limit of the enrichment. For nodal
  // snapshots the chi-weighted span is the whole fine space, so u_snap = u.
  if (base_.snapshots == SnapshotFamily::nodal) {
    u_snap_h_ = u_h_;
  } else {
    const ProductSpace snap_space = build_snapshot_product_space(grids_, pou_, spaces_);
    u_snap_h_ = solve_coarse(grids_, snap_space, A_elim_, F_).u;
  }
  u_snap_full_ = u_snap_h_;
  if (lifted) axpy(1.0, lift_, u_snap_full_);

  DenseVector d(u_h_.size());
  for (size_t p = 0; p < d.size(); ++p) d[p] = u_h_[p] - u_snap_h_[p];
  floor_energy_ = energy_norm(A_raw_, d);
}

void Driver::reset_counts(int count) {
  for (auto& sp : spaces_) sp.active = std::clamp(count, 1, sp.snapshots.count());
}

IterationRecord Driver::make_record(const AdaptConfig& cfg, int iteration,
                                    const OfflineSpace& off, const CoarseSolveResult& sol,
                                    IndicatorReport& report) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.dim = off.dim();
  rec.galerkin_residual_inf = sol.galerkin_residual_inf;

  DenseVector u_off_full = sol.u;
  if (norm_inf(lift_) > 0.0) axpy(1.0, lift_, u_off_full);

  Solutions sols{u_full_, u_snap_full_, u_off_full, sol.U0};
  rec.errors = relative_errors(sols, A_raw_, S_);

  DenseVector du(u_full_.size()), dsnap(u_full_.size());
  for (size_t p = 0; p < du.size(); ++p) {
    du[p] = u_full_[p] - u_off_full[p];
    dsnap[p] = u_snap_full_[p] - u_off_full[p];
  }
  rec.energy_error_u = energy_norm(A_raw_, du);
  rec.energy_error_usnap = energy_norm(A_raw_, dsnap);
  rec.exact_eta2 = local_energy_error2(grids_, field_, u_full_, u_off_full);
  rec.basis_counts.resize(spaces_.size());
  for (const auto& sp : spaces_) rec.basis_counts[sp.node] = sp.active;

  switch (cfg.indicator) {
    case IndicatorKind::l2:
      report = indicator_l2(grids_, field_, pou_, off, A_elim_, F_, sol.U0, spaces_,
                            cfg.q_formula);
      break;
    case IndicatorKind::h1w:
      report = indicator_h1w(grids_, field_, pou_, off, A_elim_, F_, sol.U0, spaces_, false);
      break;
    case IndicatorKind::h1w_snap:
      report = indicator_h1w(grids_, field_, pou_, off, A_elim_, F_, sol.U0, spaces_, true);
      break;
    case IndicatorKind::exact:
      report = indicator_exact(grids_, field_, u_h_, sol.u, spaces_);
      break;
  }
  rec.sum_eta2 = report.total();
  return rec;
}

ConvergenceHistory Driver::run_adaptive(const AdaptConfig& cfg) {
  cfg.validate();
  if (cfg.snapshots != base_.snapshots)
    throw std::invalid_argument("run_adaptive: snapshot family differs from the driver's");

  reset_counts(cfg.resolved_initial_basis());

  ConvergenceHistory hist;
  double initial_sum_eta2 = -1.0;

  for (int m = 0; m < cfg.max_iter; ++m) {
    const auto t0 = std::chrono::steady_clock::now();

    const OfflineSpace off = build_offline_space(grids_, pou_, spaces_);
    const CoarseSolveResult sol = solve_coarse(grids_, off.space, A_elim_, F_);

    IndicatorReport report;
    IterationRecord rec = make_record(cfg, m, off, sol, report);
    if (m == 0) initial_sum_eta2 = rec.sum_eta2;

    bool stop = false;
    switch (cfg.terminate) {
      case TerminationRule::exact_fraction: {
        const double limit = cfg.literal_fraction
                                 ? cfg.exact_fraction_p * floor_energy_
                                 : (1.0 + cfg.exact_fraction_p) * floor_energy_;
        stop = rec.energy_error_u <= limit;
        if (stop) hist.termination = "exact-fraction";
        break;
      }
      case TerminationRule::error_target: {
        const double nu = energy_norm(A_raw_, u_full_);
        stop = rec.energy_error_u <= cfg.error_target * nu;
        if (stop) hist.termination = "error-target";
        break;
      }
      case TerminationRule::indicator_tol:
        stop = rec.sum_eta2 <= cfg.indicator_tol * initial_sum_eta2;
        if (stop) hist.termination = "indicator-tol";
        break;
      case TerminationRule::max_dim:
        stop = rec.dim >= cfg.max_dim;
        if (stop) hist.termination = "max-dim";
        break;
      case TerminationRule::max_iter:
        stop = m == cfg.max_iter - 1;
        if (stop) hist.termination = "max-iter";
        break;
    }

    std::vector<int> marked;
    if (!stop) {
      marked = mark(report, cfg.theta);
      if (marked.empty()) {
        stop = true;
        hist.termination = "zero-indicator";
      }
    }
    hist.converged = stop;

    if (!stop) {
      rec.marked = static_cast<int>(marked.size());
      for (int i : marked)
        enrich(spaces_[i], enrichment_size(spaces_[i], cfg.gap_ratio, cfg.add_per_mark));
    }

    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.iterations.push_back(std::move(rec));

    if (stop) break;
  }

  if (!hist.converged && hist.termination.empty()) hist.termination = "max-iter";
  return hist;
}

ConvergenceHistory Driver::run_uniform(const AdaptConfig& cfg, int per_node_count) {
  cfg.validate();
  if (per_node_count < 1)
    throw std::invalid_argument("run_uniform: per-node count must be >= 1");
  if (cfg.snapshots != base_.snapshots)
    throw std::invalid_argument("run_uniform: snapshot family differs from the driver's");

  reset_counts(per_node_count);

  const auto t0 = std::chrono::steady_clock::now();
  const OfflineSpace off = build_offline_space(grids_, pou_, spaces_);
  const CoarseSolveResult sol = solve_coarse(grids_, off.space, A_elim_, F_);

  IndicatorReport report;
  IterationRecord rec = make_record(cfg, 0, off, sol, report);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ConvergenceHistory hist;
  hist.iterations.push_back(std::move(rec));
  hist.converged = true;
  hist.termination = "uniform";
  return hist;
}

ConvergenceHistory run_adaptive(const AdaptConfig& cfg, const StructuredGrids& grids,
                                const CoefficientField& field) {
  Driver driver(grids, field, cfg);
  return driver.run_adaptive(cfg);
}

ConvergenceHistory run_uniform(const AdaptConfig& cfg, const StructuredGrids& grids,
                               const CoefficientField& field, int per_node_count) {
  Driver driver(grids, field, cfg);
  return driver.run_uniform(cfg, per_node_count);
}

}  // namespace gmsfem
