// Times the OpenMP kernels against the serial reference path on the same
// problem and verifies that both produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmsfem/adapt.hpp"
#include "gmsfem/parallel.hpp"

using namespace gmsfem;

namespace {

struct PhaseResult {
  PartitionOfUnity pou;
  std::vector<NeighborhoodSpace> spaces;
  DenseVector u_off;
  DenseVector eta2;
  double t_pou = 0, t_spaces = 0, t_solve = 0, t_indicator = 0;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PhaseResult run_phases(const StructuredGrids& grids, const CoefficientField& kappa_only,
                       SnapshotFamily family, int init_basis) {
  PhaseResult out;
  CoefficientField field = kappa_only;

  auto t0 = std::chrono::steady_clock::now();
  out.pou = build_pou(grids, field);
  out.t_pou = seconds_since(t0);

  compute_kappa_tilde(field, grids, out.pou);

  t0 = std::chrono::steady_clock::now();
  out.spaces.resize(grids.n_coarse_nodes);
  parallel_for(grids.n_coarse_nodes, [&](size_t i) {
    SnapshotSet snap = family == SnapshotFamily::harmonic
                           ? build_snapshots_harmonic(grids, field, static_cast<int>(i))
                           : build_snapshots_nodal(grids, static_cast<int>(i));
    out.spaces[i] =
        build_neighborhood_space(grids, field, std::move(snap), static_cast<int>(i), init_basis);
  });
  out.t_spaces = seconds_since(t0);

  std::vector<int> cells(grids.n_fine_cells);
  for (int c = 0; c < grids.n_fine_cells; ++c) cells[c] = c;
  const auto dirichlet = grids.domain_boundary_nodes();
  const SparseMatrix A = assemble_stiffness(grids, field, cells, dirichlet);
  DenseVector F = assemble_load(grids, 1.0, cells);
  for (int p : dirichlet) F[p] = 0.0;

  t0 = std::chrono::steady_clock::now();
  const OfflineSpace off = build_offline_space(grids, out.pou, out.spaces);
  const CoarseSolveResult sol = solve_coarse(grids, off.space, A, F);
  out.t_solve = seconds_since(t0);
  out.u_off = sol.u;

  t0 = std::chrono::steady_clock::now();
  const IndicatorReport rep =
      indicator_h1w(grids, field, out.pou, off, A, F, sol.U0, out.spaces, false);
  out.t_indicator = seconds_since(t0);
  out.eta2 = rep.eta2;
  return out;
}

bool identical(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial-vs-OpenMP benchmark of the offline pipeline"};
  std::string coarse = "10x10", sub = "5x5", snapshots = "harmonic";
  double contrast = 1e4;
  int seed = 1, init_basis = 4;
  app.add_option("--coarse", coarse, "coarse grid, e.g. 10x10");
  app.add_option("--sub", sub, "fine cells per coarse cell");
  app.add_option("--contrast", contrast, "channel contrast");
  app.add_option("--seed", seed, "channel placement seed");
  app.add_option("--snapshots", snapshots, "harmonic | nodal");
  app.add_option("--init-basis", init_basis, "basis count per node");
  CLI11_PARSE(app, argc, argv);

  const auto x = coarse.find('x');
  const auto y = sub.find('x');
  const auto grids = build_grids(std::stoi(coarse.substr(0, x)), std::stoi(coarse.substr(x + 1)),
                                 std::stoi(sub.substr(0, y)), std::stoi(sub.substr(y + 1)));
  FieldSpec spec;
  spec.kind = FieldKind::channels;
  spec.contrast = contrast;
  spec.seed = static_cast<std::uint64_t>(seed);
  const auto field = load_field(spec, grids);
  const auto family =
      snapshots == "nodal" ? SnapshotFamily::nodal : SnapshotFamily::harmonic;

  set_parallel_enabled(false);
  const PhaseResult serial = run_phases(grids, field, family, init_basis);
  set_parallel_enabled(true);
  const PhaseResult parallel = run_phases(grids, field, family, init_basis);

  std::printf("threads: %d\n", worker_count());
  std::printf("%-22s %12s %12s %9s\n", "phase", "serial (s)", "openmp (s)", "speedup");
  auto line = [](const char* name, double ts, double tp) {
    std::printf("%-22s %12.4f %12.4f %8.2fx\n", name, ts, tp, tp > 0 ? ts / tp : 0.0);
  };
  line("partition of unity", serial.t_pou, parallel.t_pou);
  line("snapshots + eigen", serial.t_spaces, parallel.t_spaces);
  line("coarse solve", serial.t_solve, parallel.t_solve);
  line("h1w indicator", serial.t_indicator, parallel.t_indicator);

  bool ok = identical(serial.u_off, parallel.u_off) && identical(serial.eta2, parallel.eta2);
  for (int i = 0; ok && i < grids.n_coarse_nodes; ++i)
    ok = identical(serial.pou.chi[i], parallel.pou.chi[i]) &&
         identical(serial.spaces[i].eig.values, parallel.spaces[i].eig.values);
  std::printf("serial and parallel results %s\n", ok ? "identical" : "DIFFER");
  return ok ? 0 : 1;
}
