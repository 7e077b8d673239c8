#include "pflux/continuation.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace pflux {

namespace {

bool inside_tau(const Mesh& mesh, int tri, double tau) {
  const MeshRegion& r = mesh.regions[mesh.triangle_region[tri]];
  return r.outlet < 0 || r.s_hi <= tau + 1e-9;
}

std::uint64_t key_of(std::pair<int, int> k) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.first)) << 32) | static_cast<std::uint32_t>(k.second);
}

std::unordered_map<std::uint64_t, int> dof_index(const P2Space& V) {
  std::unordered_map<std::uint64_t, int> out;
  out.reserve(V.num_dofs());
  for (int d = 0; d < V.num_dofs(); ++d) out.emplace(key_of(V.global_key(d)), d);
  return out;
}

}  // namespace

ElementIntegrals element_integrals(const FlowState& state) {
  const Mesh& m = *state.mesh;
  const Eigen::VectorXd u = state.u();
  const P2Tabulation tab(5);
  const double p = state.config.p;
  ElementIntegrals out{std::vector<double>(m.num_triangles()), std::vector<double>(m.num_triangles())};
#pragma omp parallel for schedule(static)
  for (int e = 0; e < m.num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(m, e);
    double a = 0.0, b = 0.0;
    for (int q = 0; q < tab.size(); ++q) {
      const VelocitySample s = sample_velocity(*state.space, u, e, tab, q, g);
      const double w = tab.weight(q) * g.area, n2 = s.grad.squaredNorm();
      a += w * n2;
      b += w * std::pow(n2, 0.5 * p);
    }
    out.grad2[e] = a;
    out.gradp[e] = b;
  }
  return out;
}

std::vector<double> default_tau_grid(const Mesh& mesh) {
  std::vector<double> out;
  const double t_min = mesh.domain->t_min();
  for (double s : mesh.snaps.at(0)) {
    if (std::abs(s - std::round(s)) > 1e-9 || s < t_min - 1e-9 || s > mesh.t - 1.0 + 1e-9) continue;
    bool everywhere = true;
    for (int i = 1; i < static_cast<int>(mesh.snaps.size()); ++i) everywhere = everywhere && mesh.snap_index(i, s) >= 0;
    if (everywhere) out.push_back(s);
  }
  return out;
}

GrowthFunctionals growth_functionals(const FlowState& state, const std::vector<double>& tau_grid) {
  const Mesh& m = *state.mesh;
  for (std::size_t j = 0; j < tau_grid.size(); ++j) {
    const double tau = tau_grid[j];
    if (!(tau > 0.0) || tau > m.t + 1e-9 || (j > 0 && !(tau > tau_grid[j - 1])))
      throw Error(ErrorCode::ConfigError, "tau grid must be increasing within (0, t]");
    for (int i = 0; i < static_cast<int>(m.snaps.size()); ++i)
      if (m.snap_index(i, tau) < 0)
        throw Error(ErrorCode::SectionNotAligned, "tau = " + std::to_string(tau) + " is not a snap value of outlet " + std::to_string(i));
  }
  const ElementIntegrals I = element_integrals(state);
  GrowthFunctionals G;
  G.tau = tau_grid;
  for (double tau : tau_grid) {
    double a = 0.0, b = 0.0;
    for (int e = 0; e < m.num_triangles(); ++e)
      if (inside_tau(m, e, tau)) {
        a += I.grad2[e];
        b += I.gradp[e];
      }
    G.y.push_back(a / tau + b);
    G.y_p.push_back(b);
  }
  if (tau_grid.empty()) return G;
  auto index_of = [&](double v) {
    for (std::size_t j = 0; j < tau_grid.size(); ++j)
      if (std::abs(tau_grid[j] - v) < 1e-9) return static_cast<int>(j);
    return -1;
  };
  for (double eta = std::max(2.0, std::ceil(tau_grid.front() + 1.0 - 1e-9)); eta <= tau_grid.back() + 1e-9; eta += 1.0) {
    const int lo = index_of(eta - 1.0), hi = index_of(eta);
    if (lo < 0 || hi < 0) continue;
    double z = 0.0;
    for (int j = lo; j < hi; ++j) z += 0.5 * (tau_grid[j + 1] - tau_grid[j]) * (G.y[j] + G.y[j + 1]);
    G.eta.push_back(eta);
    G.z.push_back(z);
  }
  return G;
}

double subdomain_distance(const FlowState& a, const FlowState& b, double tau) {
  const Mesh& m = *a.mesh;
  const P2Space& V = *a.space;
  const int n = V.num_dofs(), nb = b.space->num_dofs();
  const auto index = dof_index(*b.space);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * n);
  std::vector<int> elements;
  for (int e = 0; e < m.num_triangles(); ++e) {
    if (!inside_tau(m, e, tau)) continue;
    elements.push_back(e);
    for (int d : V.element_dofs(e)) {
      const auto it = index.find(key_of(V.global_key(d)));
      if (it == index.end()) throw Error(ErrorCode::InvalidGeometry, "meshes do not share Omega_tau");
      w[d] = b.velocity[it->second] - a.velocity[d];
      w[n + d] = b.velocity[nb + it->second] - a.velocity[n + d];
    }
  }
  const P2Tabulation tab(5);
  const double p = a.config.p;
  double sum = 0.0;
  for (int e : elements) {
    const ElementGeometry g = element_geometry(m, e);
    for (int q = 0; q < tab.size(); ++q) {
      const VelocitySample s = sample_velocity(V, w, e, tab, q, g);
      sum += tab.weight(q) * g.area * (std::pow(s.v.norm(), p) + std::pow(s.grad.norm(), p));
    }
  }
  return std::pow(sum, 1.0 / p);
}

Eigen::VectorXd extend_by_zero(const FlowState& from, const P2Space& to) {
  const auto index = dof_index(*from.space);
  const Eigen::VectorXd u = from.u();
  const int nf = from.space->num_dofs(), n = to.num_dofs();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
  for (int d = 0; d < n; ++d) {
    const auto it = index.find(key_of(to.global_key(d)));
    if (it == index.end()) continue;
    out[d] = u[it->second];
    out[n + d] = u[nf + it->second];
  }
  return out;
}

void evaluate_growth(GrowthReport& report, const SweepOptions& options) {
  report.c1 = report.c2 = report.max_excess = report.max_growth = 0.0;
  report.growth_bounded = report.cauchy_decreasing = true;
  if (report.rows.empty()) return;
  const double t0 = report.rows.front().t, t1 = report.rows.back().t;
  std::vector<const GrowthRow*> first, last;
  for (const GrowthRow& r : report.rows) {
    if (r.t == t0) first.push_back(&r);
    if (r.t == t1) last.push_back(&r);
  }
  if (first.size() >= 2) {
    Eigen::MatrixXd A(first.size(), 2);
    Eigen::VectorXd b(first.size());
    for (std::size_t j = 0; j < first.size(); ++j) {
      A(j, 0) = first[j]->tau;
      A(j, 1) = 1.0;
      b[j] = first[j]->y;
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    report.c1 = c[0];
    report.c2 = c[1];
  } else if (!first.empty()) {
    report.c1 = first[0]->y / first[0]->tau;
  }
  for (const GrowthRow& r : report.rows) {
    const double line = report.c1 * r.tau + report.c2;
    if (r.y == 0.0) continue;
    report.max_excess = std::max(report.max_excess, line > 0.0 ? r.y / line : std::numeric_limits<double>::infinity());
  }
  for (const GrowthRow* a : first)
    for (const GrowthRow* b : last)
      if (std::abs(a->tau - b->tau) < 1e-9 && b->y > 0.0)
        report.max_growth = std::max(report.max_growth, a->y > 0.0 ? b->y / a->y : std::numeric_limits<double>::infinity());
  report.growth_bounded = report.max_excess <= options.excess_limit && report.max_growth <= 2.0;

  std::vector<double> taus = options.cauchy_tau;
  if (taus.empty())
    for (const GrowthRow* r : first) taus.push_back(r->tau);
  for (double tau : taus) {
    double prev = std::numeric_limits<double>::infinity();
    for (const GrowthRow& r : report.rows) {
      if (std::abs(r.tau - tau) > 1e-9 || !r.cauchy) continue;
      if (*r.cauchy > prev * (1.0 + 1e-12) + 1e-14) report.cauchy_decreasing = false;
      prev = *r.cauchy;
    }
  }
}

SweepResult run_truncation_sequence(const DomainPtr& domain, const std::vector<double>& fluxes,
                                    const std::vector<double>& t_list, const SolverConfig& config,
                                    const SweepOptions& options) {
  config.validate();
  if (t_list.empty()) throw Error(ErrorCode::ConfigError, "empty t list");
  for (std::size_t j = 1; j < t_list.size(); ++j)
    if (!(t_list[j] > t_list[j - 1])) throw Error(ErrorCode::ConfigError, "t list must be increasing");
  if (t_list.front() < domain->t_min()) throw Error(ErrorCode::DomainTooSmall, "t below t_min");
  const CarrierField carrier = build_carrier_2d(domain, fluxes);
  CutOptions cut;
  cut.extra_snaps = t_list;
  const Mesh root = mesh_cut_domain(cut_domain(domain, t_list.back(), cut), options.h);

  SweepResult out;
  GrowthReport& rep = out.report;
  rep.p = config.p;
  rep.t_list = t_list;
  for (double t : t_list) {
    auto mesh = std::make_shared<const Mesh>(t == t_list.back() ? root : submesh(root, t));
    SolveOptions so;
    so.forcing = options.forcing;
    if (options.warm_start && !out.states.empty()) so.initial_u = extend_by_zero(out.states.back(), P2Space(mesh));
    const auto start = std::chrono::steady_clock::now();
    FlowState st;
    try {
      st = solve_truncated(cut_domain(domain, t, cut), mesh, carrier, config, so);
    } catch (const SolveFailure& e) {
      evaluate_growth(rep, options);
      throw SweepFailure(e, std::move(out));
    } catch (const Error& e) {
      evaluate_growth(rep, options);
      throw SweepFailure(SolveFailure(e.code(), e.what(), {}), std::move(out));
    }
    TruncationStats stats;
    stats.t = t;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats.unknowns = 2 * st.space->num_dofs() + st.space->num_vertices();
    stats.iterations = static_cast<int>(st.history.size()) - 1;
    stats.residual = st.history.back().residual;
    const std::vector<CrossSection> sections = snapped_sections(*mesh);
    const FluxAudit audit = flux_audit(st, sections);
    stats.flux_error.assign(mesh->domain->k(), 0.0);
    for (std::size_t j = 0; j < sections.size(); ++j) {
      const int i = sections[j].outlet;
      const double scale = st.outlet_flux[i] != 0.0 ? std::abs(st.outlet_flux[i]) : 1.0;
      stats.flux_error[i] = std::max(stats.flux_error[i], std::abs(audit.error[j]) / scale);
    }
    stats.max_pairwise = audit.max_pairwise;
    rep.stats.push_back(stats);

    const GrowthFunctionals G = growth_functionals(st, default_tau_grid(*mesh));
    for (std::size_t j = 0; j < G.tau.size(); ++j) {
      GrowthRow row{t, G.tau[j], G.y[j], G.y_p[j], std::nullopt, std::nullopt};
      for (std::size_t k = 0; k < G.eta.size(); ++k)
        if (std::abs(G.eta[k] - G.tau[j]) < 1e-9) row.z = G.z[k];
      if (!out.states.empty() && G.tau[j] <= out.states.back().mesh->t + 1e-9)
        row.cauchy = subdomain_distance(out.states.back(), st, G.tau[j]);
      rep.rows.push_back(row);
    }
    out.states.push_back(std::move(st));
  }
  if (options.probes > 0) {
    ProbeOptions po;
    po.count = options.probes;
    po.seed = options.seed;
    po.h = options.h;
    const CarrierReport cr = verify_carrier(carrier, config.p, t_list, po);
    for (std::size_t j = 0; j < cr.rows.size(); ++j) rep.stats[j].estimate_i = cr.rows[j].ratio_i;
  }
  rep.complete = true;
  evaluate_growth(rep, options);
  return out;
}

void write_growth_csv(const GrowthReport& report, std::ostream& out) {
  out << "t,tau,y,y_p,z,cauchy\n" << std::setprecision(12);
  for (const GrowthRow& r : report.rows) {
    out << r.t << ',' << r.tau << ',' << r.y << ',' << r.y_p << ',';
    if (r.z) out << *r.z;
    out << ',';
    if (r.cauchy) out << *r.cauchy;
    out << '\n';
  }
}

}  // namespace pflux
