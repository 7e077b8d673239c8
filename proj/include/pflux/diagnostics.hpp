#pragma once

#include "pflux/solver.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace pflux {

/// Fully developed power-law channel flow v = (u(y), 0) on |y| < h driven by the
/// pressure gradient -G, with stress |D|^{p-2} D and the Frobenius norm.
struct PoiseuilleProfile {
  double p = 2.0;
  double h = 1.0;
  double G = 1.0;
  double flux = 0.0;  // by quadrature

  double operator()(double y) const;
  /// Closed-form integral of u over [-h, h].
  double analytic_flux() const;
};

PoiseuilleProfile poiseuille_exact(double p, double h, double G);
/// Profile with the given flux.
PoiseuilleProfile poiseuille_with_flux(double p, double h, double flux);

struct PoiseuilleComparison {
  double relative_l2 = 0.0;
  double area = 0.0;
  double seconds = 0.0;
  int iterations = 0;
};

/// Relative L2 distance between v and (u(y), 0) over the core and the outlet blocks
/// with s <= tau (for the straight strip the mid-third |x| <= 1 + tau).
PoiseuilleComparison compare_with_poiseuille(const FlowState& state, const PoiseuilleProfile& profile, double tau);

struct FluxAudit {
  std::vector<double> flux;
  std::vector<double> error;   // flux - outlet flux
  double max_pairwise = 0.0;   // between sections of the same outlet
  double max_relative = 0.0;   // max |error| / |outlet flux| over outlets with nonzero flux
};

/// Quadrature of v.n over snapped sections; throws SectionNotAligned.
FluxAudit flux_audit(const FlowState& state, const std::vector<CrossSection>& sections);
/// Same, for a continuous field evaluated along the exact sections.
FluxAudit flux_audit(const CarrierField& field, const std::vector<CrossSection>& sections, double tol = 1e-13);

/// Every snapped section of every outlet of the state's mesh.
std::vector<CrossSection> snapped_sections(const Mesh& mesh);

struct KornPoincare {
  double max_korn = 0.0;       // max ||grad v||^2 / (2 ||D v||^2)
  double max_poincare = 0.0;   // max ||v||_{L^p} / ||grad v||_{L^p}
  int samples = 0;
};

/// Korn ratios of random zero-trace P2 fields (independent coefficients at interior dofs)
/// and Poincare ratios of smooth zero-trace samples (torsion function times random
/// low-frequency fields, so the same functions are sampled on every mesh).
KornPoincare korn_poincare_check(const std::shared_ptr<const Mesh>& mesh, int samples, std::uint64_t seed, double p = 2.0);

/// Discrete energy identity for a converged state, with u = v - lift:
/// int S(D v):D u + c(v; v, u) + int P div(lift) - int f.u, normalized by int |S(D v):D u|.
double energy_residual(const FlowState& state, const Forcing& forcing = {});

struct CarrierRow {
  double t = 0.0;
  double ratio_i = 0.0;     // max over probes
  double annulus_ii = 0.0;  // int over Omega_t minus Omega_{t-1} of |grad a|^p
  double ratio_iii = 0.0;   // int over Omega_t of |grad a|^p / (t + 1)
  double max_probe_divergence = 0.0;
};

struct CarrierReport {
  double p = 2.0;
  std::vector<CarrierRow> rows;
  double spread_i = 0.0;  // max_t ratio_i / min_t ratio_i
  bool bounded = true;    // ratio_i stays within 3x its max over the first two t
};

struct ProbeOptions {
  int count = 20;
  std::uint64_t seed = 1;
  double h = 0.125;
};

/// Estimates i)-iii) on Omega_t for each t, with probes obtained as discrete Stokes
/// solutions (zero boundary values) for random forcing constant on each mesh block.
/// Throws InvalidProbe if a probe's discrete divergence residual exceeds 1e-8.
CarrierReport verify_carrier(const CarrierField& field, double p, const std::vector<double>& t_list,
                             const ProbeOptions& options = {});

void write_carrier_csv(const CarrierReport& report, std::ostream& out);

}  // namespace pflux
