#include <doctest.h>

#include "pflux/continuation.hpp"

#include <cmath>

using namespace pflux;
using namespace pflux::shapes;

namespace {

struct Line {
  double slope, intercept;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

}  // namespace

TEST_CASE("growth functionals") {
  const DomainPtr d = strip();
  const CutDomain cd = cut_domain(d, 9.0);
  const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cd, 0.25));
  const std::vector<double> grid = default_tau_grid(*mesh);
  CHECK(grid == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});

  const FlowState zero = solve_truncated(cd, mesh, build_carrier_2d(d, {0.0, 0.0}), SolverConfig{.p = 3.0});
  const GrowthFunctionals g0 = growth_functionals(zero, grid);
  for (double v : g0.y) CHECK(v == 0.0);
  for (double v : g0.z) CHECK(v == 0.0);

  const FlowState st = solve_truncated(cd, mesh, build_carrier_2d(d, {-1.0, 1.0}), SolverConfig{.p = 3.0});
  const GrowthFunctionals g = growth_functionals(st, grid);
  REQUIRE(g.y.size() == grid.size());
  for (std::size_t j = 1; j < g.y_p.size(); ++j) CHECK(g.y_p[j] >= g.y_p[j - 1]);
  for (std::size_t j = 0; j < g.y.size(); ++j) CHECK(g.y[j] >= g.y_p[j]);
  REQUIRE(g.eta.size() == 7);
  for (std::size_t k = 0; k < g.eta.size(); ++k) {
    const int j = static_cast<int>(g.eta[k]) - 1;
    CHECK(g.z[k] == doctest::Approx(0.5 * (g.y[j - 1] + g.y[j])).epsilon(1e-14));
  }

  // whole-domain p-term against a direct sum over elements
  const ElementIntegrals I = element_integrals(st);
  double total = 0.0;
  for (double v : I.gradp) total += v;
  const GrowthFunctionals full = growth_functionals(st, {9.0});
  CHECK(full.y_p[0] == doctest::Approx(total).epsilon(1e-12));

  std::vector<double> tau, y;
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (grid[j] >= 2.0) {
      tau.push_back(grid[j]);
      y.push_back(g.y[j]);
    }
  const Line fit = least_squares(tau, y);
  for (std::size_t j = 0; j < tau.size(); ++j) CHECK(y[j] <= 1.1 * (fit.slope * tau[j] + fit.intercept));

  CHECK_THROWS_AS(growth_functionals(st, {1.5}), Error);
  CHECK_THROWS_AS(growth_functionals(st, {3.0, 2.0}), Error);
}

TEST_CASE("zero-flux sweep") {
  const SweepResult r = run_truncation_sequence(strip(), {0.0, 0.0}, {3.0, 5.0}, SolverConfig{.p = 3.0}, SweepOptions{.h = 0.25});
  REQUIRE(r.states.size() == 2);
  for (const FlowState& s : r.states) CHECK(s.velocity.norm() == 0.0);
  for (const GrowthRow& row : r.report.rows) {
    CHECK(row.y == 0.0);
    if (row.cauchy) CHECK(*row.cauchy == 0.0);
  }
  CHECK(r.report.complete);
  CHECK(r.report.growth_bounded);
  CHECK(r.report.cauchy_decreasing);
}

TEST_CASE("truncation sequence on the strip") {
  SweepOptions opt;
  opt.h = 0.25;
  const SweepResult r = run_truncation_sequence(strip(), {-1.0, 1.0}, {3.0, 5.0, 7.0}, SolverConfig{.p = 3.0}, opt);
  REQUIRE(r.states.size() == 3);
  REQUIRE(r.report.stats.size() == 3);
  for (const TruncationStats& s : r.report.stats) {
    CHECK(s.residual <= 1e-10);
    CHECK(s.max_pairwise <= 1e-3);
  }
  CHECK(r.states[0].mesh->num_vertices() < r.states[2].mesh->num_vertices());

  const double d35 = subdomain_distance(r.states[0], r.states[1], 2.0);
  const double d57 = subdomain_distance(r.states[1], r.states[2], 2.0);
  CHECK(subdomain_distance(r.states[1], r.states[1], 2.0) == 0.0);
  CHECK(d35 > 0.0);
  CHECK(d57 <= d35);
  int cauchy_rows = 0;
  for (const GrowthRow& row : r.report.rows)
    if (row.cauchy && row.tau == 2.0) {
      ++cauchy_rows;
      CHECK(*row.cauchy == doctest::Approx(row.t == 5.0 ? d35 : d57).epsilon(1e-12));
    }
  CHECK(cauchy_rows == 2);

  // zero extension: shared dofs carry u, new ones are zero
  const Eigen::VectorXd ext = extend_by_zero(r.states[0], *r.states[2].space);
  const Eigen::VectorXd u0 = r.states[0].u();
  CHECK(ext.squaredNorm() == doctest::Approx(u0.squaredNorm()).epsilon(1e-12));

  CHECK_THROWS_AS(run_truncation_sequence(strip(), {-1.0, 1.0}, {5.0, 3.0}, SolverConfig{.p = 3.0}, opt), Error);
  CHECK_THROWS_AS(run_truncation_sequence(strip(), {-1.0, 2.0}, {3.0}, SolverConfig{.p = 3.0}, opt), Error);
}

TEST_CASE("growth evaluation") {
  GrowthReport rep;
  for (double t : {4.0, 8.0, 16.0})
    for (double tau = 1; tau <= t - 1; ++tau) rep.rows.push_back({t, tau, 2.0 * tau + 3.0, 0.0, std::nullopt, std::nullopt});
  REQUIRE(rep.rows.size() == 25);
  rep.rows[4].cauchy = 0.5;   // t = 8, tau = 2
  rep.rows[11].cauchy = 0.4;  // t = 16, tau = 2
  SweepOptions opt;
  evaluate_growth(rep, opt);
  CHECK(rep.c1 == doctest::Approx(2.0));
  CHECK(rep.c2 == doctest::Approx(3.0));
  CHECK(rep.max_excess == doctest::Approx(1.0));
  CHECK(rep.max_growth == doctest::Approx(1.0));
  CHECK(rep.growth_bounded);
  CHECK(rep.cauchy_decreasing);
  rep.rows[11].cauchy = 0.7;
  evaluate_growth(rep, opt);
  CHECK_FALSE(rep.cauchy_decreasing);
  rep.rows.back().y = 100.0;
  evaluate_growth(rep, opt);
  CHECK_FALSE(rep.growth_bounded);
}
