#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gmsfem/adapt.hpp"
#include "gmsfem/cliio.hpp"

namespace {

using gmsfem::KeyValues;

struct CommonFlags {
  std::string config_file;
  KeyValues overrides;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value configuration file");
  auto opt = [cmd, &flags](const std::string& flag, const std::string& key,
                           const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, help);
  };
  opt("--coarse", "coarse", "coarse grid, e.g. 10x10");
  opt("--sub", "sub", "fine cells per coarse cell, e.g. 5x5");
  opt("--field", "field", "uniform | channels | path to a field matrix");
  opt("--contrast", "contrast", "inclusion/background ratio (>= 1)");
  opt("--seed", "seed", "placement seed for synthetic fields");
  opt("--theta", "theta", "bulk marking fraction in (0,1)");
  opt("--indicator", "indicator", "l2 | h1w | h1w-snap | exact");
  opt("--snapshots", "snapshots", "harmonic | nodal");
  opt("--init-basis", "init_basis", "initial basis count per node (0 = family default)");
  opt("--add-per-mark", "add_per_mark", "basis functions added per marked region");
  opt("--gap-ratio", "gap_ratio", "spectral-gap enrichment ratio (1 = add fixed count)");
  opt("--terminate", "terminate", "exact:P | exact-literal:P | tol:EPS | max-dim:N | max-iter");
  opt("--max-iter", "max_iter", "iteration cap");
  opt("--f", "f", "constant forcing term");
  opt("--q-formula", "q_formula", "consistent | paper");
  opt("--lift", "lift", "affine boundary lifting a,b,c");
  opt("--out", "out", "output directory");
}

gmsfem::RunConfig resolve_config(const CommonFlags& flags) {
  if (!flags.config_file.empty())
    return gmsfem::parse_config(flags.config_file, flags.overrides);
  return gmsfem::parse_config(flags.overrides);
}

void print_history(const gmsfem::ConvergenceHistory& hist) {
  std::printf("%6s %8s %12s %12s %12s %8s\n", "iter", "dim", "H1_vs_u(%)", "L2_vs_u(%)",
              "sum_eta2", "marked");
  for (const auto& r : hist.iterations)
    std::printf("%6d %8d %12.4f %12.4f %12.4e %8d\n", r.iteration, r.dim, r.errors.h1_vs_u,
                r.errors.l2_vs_u, r.sum_eta2, r.marked);
  std::printf("terminated by %s after %zu iterations (converged: %s)\n",
              hist.termination.c_str(), hist.iterations.size(),
              hist.converged ? "yes" : "no");
}

void ensure_writable(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

int run_one(const gmsfem::RunConfig& config, bool uniform, int basis_per_node) {
  ensure_writable(config.out_dir);
  const auto grids =
      gmsfem::build_grids(config.nx_coarse, config.ny_coarse, config.nx_sub, config.ny_sub);
  const auto field = gmsfem::load_field(config.field, grids);

  gmsfem::Driver driver(grids, field, config.adapt);
  const auto hist = uniform ? driver.run_uniform(config.adapt, basis_per_node)
                            : driver.run_adaptive(config.adapt);
  gmsfem::emit_outputs(hist, grids, config);
  print_history(hist);
  std::printf("outputs written to %s\n", config.out_dir.c_str());
  return 0;
}

int run_compare(const gmsfem::RunConfig& config, const std::string& ind_a,
                const std::string& ind_b) {
  ensure_writable(config.out_dir);
  const auto grids =
      gmsfem::build_grids(config.nx_coarse, config.ny_coarse, config.nx_sub, config.ny_sub);
  const auto field = gmsfem::load_field(config.field, grids);

  auto with_indicator = [&](const std::string& name) {
    gmsfem::RunConfig c = config;
    if (name == "l2") c.adapt.indicator = gmsfem::IndicatorKind::l2;
    else if (name == "h1w") c.adapt.indicator = gmsfem::IndicatorKind::h1w;
    else if (name == "h1w-snap") c.adapt.indicator = gmsfem::IndicatorKind::h1w_snap;
    else if (name == "exact") c.adapt.indicator = gmsfem::IndicatorKind::exact;
    else throw std::invalid_argument("compare: unknown indicator '" + name + "'");
    return c;
  };

  gmsfem::RunConfig ca = with_indicator(ind_a);
  gmsfem::RunConfig cb = with_indicator(ind_b);
  ca.out_dir = config.out_dir + "/a";
  cb.out_dir = config.out_dir + "/b";

  gmsfem::Driver driver(grids, field, config.adapt);
  const auto ha = driver.run_adaptive(ca.adapt);
  const auto hb = driver.run_adaptive(cb.adapt);
  gmsfem::emit_outputs(ha, grids, ca);
  gmsfem::emit_outputs(hb, grids, cb);

  std::filesystem::create_directories(config.out_dir);
  std::ofstream out(config.out_dir + "/compare.csv");
  out << "indicator,iterations,final_dim,L2_vs_u,H1_vs_u,L2_vs_usnap,H1_vs_usnap\n";
  auto row = [&](const std::string& name, const gmsfem::ConvergenceHistory& h) {
    const auto& e = h.last().errors;
    out << name << "," << h.iterations.size() << "," << h.final_dim() << ","
        << gmsfem::format_number(e.l2_vs_u) << "," << gmsfem::format_number(e.h1_vs_u) << ","
        << gmsfem::format_number(e.l2_vs_usnap) << "," << gmsfem::format_number(e.h1_vs_usnap)
        << "\n";
  };
  row(ind_a, ha);
  row(ind_b, hb);

  std::printf("--- %s ---\n", ind_a.c_str());
  print_history(ha);
  std::printf("--- %s ---\n", ind_b.c_str());
  print_history(hb);
  std::printf("side-by-side table: %s/compare.csv\n", config.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive generalized multiscale finite element solver"};
  app.require_subcommand(1);

  CommonFlags run_flags, uniform_flags, compare_flags;
  int basis_per_node = 4;
  std::string ind_a = "h1w", ind_b = "l2";

  CLI::App* run_cmd = app.add_subcommand("run", "adaptive enrichment run");
  add_common_flags(run_cmd, run_flags);

  CLI::App* uniform_cmd =
      app.add_subcommand("uniform", "single solve with a fixed basis count per node");
  add_common_flags(uniform_cmd, uniform_flags);
  uniform_cmd->add_option("--basis-per-node", basis_per_node, "basis functions per coarse node")
      ->required();

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "adaptive runs with two indicators on the same field");
  add_common_flags(compare_cmd, compare_flags);
  compare_cmd->add_option("--indicator-a", ind_a, "first indicator");
  compare_cmd->add_option("--indicator-b", ind_b, "second indicator");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run_one(resolve_config(run_flags), false, 0);
    if (uniform_cmd->parsed())
      return run_one(resolve_config(uniform_flags), true, basis_per_node);
    return run_compare(resolve_config(compare_flags), ind_a, ind_b);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
