#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gmsfem/adapt.hpp"

using namespace gmsfem;

namespace {

IndicatorReport report_from(std::vector<double> eta2, std::vector<std::uint8_t> sat = {}) {
  IndicatorReport r;
  r.eta2 = std::move(eta2);
  r.saturated = sat.empty() ? std::vector<std::uint8_t>(r.eta2.size(), 0) : std::move(sat);
  r.lambda_next.assign(r.eta2.size(), 1.0);
  return r;
}

CoefficientField channel_field(const StructuredGrids& g, double contrast, int seed = 1) {
  FieldSpec spec;
  spec.kind = FieldKind::channels;
  spec.contrast = contrast;
  spec.seed = static_cast<std::uint64_t>(seed);
  return load_field(spec, g);
}

}  // namespace

TEST_CASE("bulk marking: prefix rule") {
  const auto m = mark(report_from({5, 3, 2}), 0.7);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);

  // theta -> 0+ marks exactly one region
  CHECK(mark(report_from({5, 3, 2}), 1e-12).size() == 1);

  // equal values with theta near one marks everything
  CHECK(mark(report_from({1, 1, 1, 1, 1}), 1.0 - 1e-12).size() == 5);
}

TEST_CASE("bulk marking: ties, saturation and emptiness") {
  // tie broken by ascending node index
  const auto m = mark(report_from({3, 5, 5}), 0.5);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == 1);
  CHECK(m[1] == 2);

  // saturated regions are excluded from both the total and the prefix
  const auto ms = mark(report_from({5, 3, 2}, {1, 0, 0}), 0.7);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0] == 1);
  CHECK(ms[1] == 2);

  CHECK(mark(report_from({0, 0, 0}), 0.5).empty());
  CHECK(mark(report_from({1, 2}, {1, 1}), 0.5).empty());
}

TEST_CASE("config validation names the offending field") {
  AdaptConfig cfg;
  cfg.theta = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), "theta must lie strictly between 0 and 1",
                       std::invalid_argument);
  cfg.theta = 0.7;
  cfg.add_per_mark = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.add_per_mark = 1;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("adaptive run: monotone errors, growing dims, bounded residuals") {
  const auto grids = build_grids(6, 6, 3, 3);
  const auto field = channel_field(grids, 1e3);
  AdaptConfig cfg;
  cfg.theta = 0.7;
  cfg.initial_basis = 1;
  cfg.terminate = TerminationRule::error_target;
  cfg.error_target = 0.10;
  cfg.max_iter = 60;

  Driver driver(grids, field, cfg);
  const auto hist = driver.run_adaptive(cfg);
  CHECK(hist.converged);
  CHECK(hist.termination == "error-target");
  REQUIRE(hist.iterations.size() >= 2);

  const double f_inf = norm_inf(driver.load());
  for (size_t m = 0; m < hist.iterations.size(); ++m) {
    const auto& r = hist.iterations[m];
    CHECK(r.galerkin_residual_inf <= 1e-8 * f_inf);
    if (m > 0) {
      CHECK(r.dim > hist.iterations[m - 1].dim);
      CHECK(r.energy_error_u <= hist.iterations[m - 1].energy_error_u + 1e-10);
    }
    const bool last = m + 1 == hist.iterations.size();
    if (!last) CHECK(r.marked > 0);
    else CHECK(r.marked == 0);
  }

  const auto& final = hist.last();
  const double nu = energy_norm(driver.stiffness_raw(), driver.fine_solution());
  CHECK(final.energy_error_u <= 0.10 * nu);
}

TEST_CASE("uniform run matches adaptive iteration zero") {
  const auto grids = build_grids(4, 4, 3, 3);
  const auto field = channel_field(grids, 100);
  AdaptConfig cfg;
  cfg.initial_basis = 2;
  cfg.max_iter = 3;
  cfg.terminate = TerminationRule::max_iter;

  Driver driver(grids, field, cfg);
  const auto adaptive = driver.run_adaptive(cfg);
  const auto uniform = driver.run_uniform(cfg, 2);

  CHECK(uniform.iterations.size() == 1);
  CHECK(uniform.last().dim == adaptive.iterations.front().dim);
  CHECK(uniform.last().errors.h1_vs_u ==
        doctest::Approx(adaptive.iterations.front().errors.h1_vs_u).epsilon(1e-12));
}

TEST_CASE("uniform enrichment is monotone in the basis count") {
  const auto grids = build_grids(4, 4, 3, 3);
  const auto field = channel_field(grids, 1e3);
  AdaptConfig cfg;
  Driver driver(grids, field, cfg);
  double prev = 1e300;
  for (int k = 1; k <= 5; ++k) {
    const auto h = driver.run_uniform(cfg, k);
    CHECK(h.last().energy_error_u <= prev + 1e-10);
    prev = h.last().energy_error_u;
  }
}

TEST_CASE("histories are deterministic across fresh drivers") {
  const auto grids = build_grids(4, 4, 3, 3);
  const auto field = channel_field(grids, 1e3);
  AdaptConfig cfg;
  cfg.initial_basis = 1;
  cfg.terminate = TerminationRule::error_target;
  cfg.error_target = 0.15;
  cfg.max_iter = 30;

  const auto h1 = run_adaptive(cfg, grids, field);
  const auto h2 = run_adaptive(cfg, grids, field);
  REQUIRE(h1.iterations.size() == h2.iterations.size());
  for (size_t m = 0; m < h1.iterations.size(); ++m) {
    const auto& a = h1.iterations[m];
    const auto& b = h2.iterations[m];
    CHECK(a.dim == b.dim);
    CHECK(a.marked == b.marked);
    CHECK(a.sum_eta2 == b.sum_eta2);
    CHECK(a.errors.l2_vs_u == b.errors.l2_vs_u);
    CHECK(a.errors.h1_vs_u == b.errors.h1_vs_u);
    CHECK(a.errors.l2_vs_usnap == b.errors.l2_vs_usnap);
    CHECK(a.errors.h1_vs_usnap == b.errors.h1_vs_usnap);
    CHECK(a.energy_error_u == b.energy_error_u);
    CHECK(a.basis_counts == b.basis_counts);
    CHECK(a.exact_eta2 == b.exact_eta2);
  }
}

TEST_CASE("indicator-tol and max-iter termination") {
  const auto grids = build_grids(4, 4, 3, 3);
  const auto field = channel_field(grids, 100);

  AdaptConfig cfg;
  cfg.initial_basis = 1;
  cfg.terminate = TerminationRule::indicator_tol;
  cfg.indicator_tol = 1e-2;  // relative to the first iteration's sum
  cfg.max_iter = 50;
  Driver driver(grids, field, cfg);
  const auto h = driver.run_adaptive(cfg);
  CHECK(h.converged);
  CHECK(h.termination == "indicator-tol");
  CHECK(h.last().sum_eta2 <= 1e-2 * h.iterations.front().sum_eta2);

  AdaptConfig cfg2 = cfg;
  cfg2.terminate = TerminationRule::max_iter;
  cfg2.max_iter = 3;
  const auto h2 = driver.run_adaptive(cfg2);
  CHECK(h2.iterations.size() == 3);
  CHECK(h2.termination == "max-iter");
}

TEST_CASE("literal exact-fraction rule cannot fire and hits max-iter") {
  const auto grids = build_grids(3, 3, 3, 3);
  const auto field = channel_field(grids, 100);
  AdaptConfig cfg;
  cfg.initial_basis = 1;
  cfg.terminate = TerminationRule::exact_fraction;
  cfg.literal_fraction = true;
  cfg.exact_fraction_p = 0.05;
  cfg.max_iter = 4;
  Driver driver(grids, field, cfg);
  const auto h = driver.run_adaptive(cfg);
  CHECK_FALSE(h.converged);
  CHECK(h.iterations.size() == 4);
}

TEST_CASE("spectral-gap enrichment rule stays within bounds") {
  const auto grids = build_grids(4, 4, 3, 3);
  const auto field = channel_field(grids, 1e3);
  AdaptConfig cfg;
  cfg.initial_basis = 1;
  cfg.gap_ratio = 1.5;
  cfg.terminate = TerminationRule::error_target;
  cfg.error_target = 0.2;
  cfg.max_iter = 30;
  Driver driver(grids, field, cfg);
  const auto h = driver.run_adaptive(cfg);
  CHECK(h.converged);
  for (size_t m = 1; m < h.iterations.size(); ++m)
    CHECK(h.iterations[m].dim > h.iterations[m - 1].dim);
}

TEST_CASE("affine lifting solves the lifted problem consistently") {
  const auto grids = build_grids(3, 3, 3, 3);
  const auto field = channel_field(grids, 10);
  AdaptConfig cfg;
  cfg.lift = {0.5, 1.0, -0.25};
  cfg.terminate = TerminationRule::max_iter;
  cfg.max_iter = 2;
  Driver driver(grids, field, cfg);

  // the reported fine solution satisfies the boundary condition g = a+bx+cy
  const auto& u = driver.fine_solution();
  for (int p = 0; p < grids.n_fine_nodes; ++p) {
    if (!grids.boundary_node[p]) continue;
    const auto [fx, fy] = grids.fine_node_xy(p);
    const double gval = 0.5 + grids.node_x(fx) - 0.25 * grids.node_y(fy);
    CHECK(u[p] == doctest::Approx(gval).epsilon(1e-12));
  }
  const auto h = driver.run_adaptive(cfg);
  CHECK(h.iterations.front().errors.h1_vs_u < 100.0);
}
