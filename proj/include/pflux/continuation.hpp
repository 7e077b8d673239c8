#pragma once

#include "pflux/diagnostics.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace pflux {

/// y(tau) = (1/tau) ||grad u||^2_{L2(Omega_tau)} + ||grad u||^p_{Lp(Omega_tau)} and
/// z(eta) = int_{eta-1}^{eta} y by the trapezoid rule on the tau grid.
struct GrowthFunctionals {
  std::vector<double> tau;
  std::vector<double> y;
  std::vector<double> y_p;  // the p-term alone
  std::vector<double> eta;
  std::vector<double> z;
};

/// tau values must be snap values of every outlet, increasing, and at most t; throws SectionNotAligned.
GrowthFunctionals growth_functionals(const FlowState& state, const std::vector<double>& tau_grid);

/// Integer snap values tau with t_min <= tau <= t - 1.
std::vector<double> default_tau_grid(const Mesh& mesh);

/// Per-element integrals of |grad u|^2 and |grad u|^p, with u = v - lift.
struct ElementIntegrals {
  std::vector<double> grad2;
  std::vector<double> gradp;
};
ElementIntegrals element_integrals(const FlowState& state);

/// ||v_b - v_a||_{W^{1,p}(Omega_tau)} for states on nested submeshes of one root mesh.
double subdomain_distance(const FlowState& a, const FlowState& b, double tau);

/// u of `from` extended by zero to the dofs of `to` (matched through root-mesh vertex ids).
Eigen::VectorXd extend_by_zero(const FlowState& from, const P2Space& to);

struct GrowthRow {
  double t = 0.0;
  double tau = 0.0;
  double y = 0.0;
  double y_p = 0.0;
  std::optional<double> z;       // z(eta) at eta = tau
  std::optional<double> cauchy;  // distance on Omega_tau to the previous t
};

struct TruncationStats {
  double t = 0.0;
  int unknowns = 0;
  int iterations = 0;
  double residual = 0.0;
  double seconds = 0.0;
  std::vector<double> flux_error;  // per outlet, max over its snapped sections, relative to |alpha|
  double max_pairwise = 0.0;
  std::optional<double> estimate_i;
};

struct GrowthReport {
  double p = 2.0;
  std::vector<double> t_list;
  std::vector<GrowthRow> rows;
  std::vector<TruncationStats> stats;
  double c1 = 0.0, c2 = 0.0;  // least squares on the smallest t
  double max_excess = 0.0;    // max y / (c1 tau + c2) over all rows
  double max_growth = 0.0;    // max over tau of (y/tau at the largest t) / (y/tau at the smallest t)
  bool growth_bounded = true;
  bool cauchy_decreasing = true;
  bool complete = false;      // false when a solve failed
};

struct SweepOptions {
  double h = 0.125;
  Forcing forcing;
  bool warm_start = true;
  double excess_limit = 1.1;
  /// Fixed subdomains for the Cauchy check; empty means every shared tau.
  std::vector<double> cauchy_tau{2.0};
  /// Random probes per t for estimate i); 0 skips it.
  int probes = 0;
  std::uint64_t seed = 1;
};

struct SweepResult {
  std::vector<FlowState> states;
  GrowthReport report;
};

/// Solves on Omega_t for each t of an increasing list, all meshes being submeshes of the mesh of
/// Omega_{t_max}. A failed solve is rethrown as SweepFailure carrying the partial result.
SweepResult run_truncation_sequence(const DomainPtr& domain, const std::vector<double>& fluxes,
                                    const std::vector<double>& t_list, const SolverConfig& config,
                                    const SweepOptions& options = {});

class SweepFailure : public SolveFailure {
 public:
  SweepFailure(const SolveFailure& cause, SweepResult partial)
      : SolveFailure(cause), partial_(std::move(partial)) {}
  const SweepResult& partial() const { return partial_; }

 private:
  SweepResult partial_;
};

/// Fills c1, c2 and the boundedness and Cauchy flags from the rows.
void evaluate_growth(GrowthReport& report, const SweepOptions& options);

void write_growth_csv(const GrowthReport& report, std::ostream& out);

}  // namespace pflux
