#include "pflux/diagnostics.hpp"

#include "pflux/quadrature.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

namespace pflux {

double PoiseuilleProfile::operator()(double y) const {
  const double pp = p / (p - 1.0);
  const double C = (p - 1.0) / p * std::pow(std::pow(2.0, 0.5 * p) * G, 1.0 / (p - 1.0));
  const double ay = std::min(std::abs(y), h);
  return C * (std::pow(h, pp) - std::pow(ay, pp));
}

double PoiseuilleProfile::analytic_flux() const {
  const double pp = p / (p - 1.0);
  const double C = (p - 1.0) / p * std::pow(std::pow(2.0, 0.5 * p) * G, 1.0 / (p - 1.0));
  return 2.0 * C * std::pow(h, pp + 1.0) * pp / (pp + 1.0);
}

PoiseuilleProfile poiseuille_exact(double p, double h, double G) {
  if (!(p >= 2.0)) throw Error(ErrorCode::UnsupportedExponent, "p = " + std::to_string(p) + " < 2");
  if (!(h > 0.0) || !(G > 0.0)) throw Error(ErrorCode::ConfigError, "half-width and pressure gradient must be positive");
  PoiseuilleProfile prof{p, h, G, 0.0};
  auto u = [&](double y) { return prof(y); };
  prof.flux = quad::adaptive_gk(u, -h, 0.0, 1e-14) + quad::adaptive_gk(u, 0.0, h, 1e-14);
  return prof;
}

PoiseuilleProfile poiseuille_with_flux(double p, double h, double flux) {
  const PoiseuilleProfile unit = poiseuille_exact(p, h, 1.0);
  return poiseuille_exact(p, h, std::pow(flux / unit.analytic_flux(), p - 1.0));
}

namespace {

bool inside_tau(const Mesh& mesh, int tri, double tau) {
  const MeshRegion& r = mesh.regions[mesh.triangle_region[tri]];
  return r.outlet < 0 || r.s_hi <= tau + 1e-9;
}

}  // namespace

PoiseuilleComparison compare_with_poiseuille(const FlowState& state, const PoiseuilleProfile& profile, double tau) {
  const Mesh& m = *state.mesh;
  const P2Tabulation tab(8);
  double err2 = 0.0, ref2 = 0.0, area = 0.0;
  for (int e = 0; e < m.num_triangles(); ++e) {
    if (!inside_tau(m, e, tau)) continue;
    const ElementGeometry g = element_geometry(m, e);
    area += g.area;
    for (int q = 0; q < tab.size(); ++q) {
      const VelocitySample s = sample_velocity(*state.space, state.velocity, e, tab, q, g);
      const Eigen::Vector2d ref(profile(g.map(tab.lambda(q)).y()), 0.0);
      err2 += tab.weight(q) * g.area * (s.v - ref).squaredNorm();
      ref2 += tab.weight(q) * g.area * ref.squaredNorm();
    }
  }
  PoiseuilleComparison c;
  c.relative_l2 = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
  c.area = area;
  c.iterations = static_cast<int>(state.history.size()) - 1;
  return c;
}

std::vector<CrossSection> snapped_sections(const Mesh& mesh) {
  std::vector<CrossSection> out;
  for (int i = 0; i < static_cast<int>(mesh.snaps.size()); ++i)
    for (double s : mesh.snaps[i]) out.push_back(cross_section(*mesh.domain, i, s));
  return out;
}

namespace {

FluxAudit summarize(const std::vector<CrossSection>& sections, std::vector<double> flux, const std::vector<double>& alpha) {
  FluxAudit a;
  a.flux = std::move(flux);
  for (std::size_t j = 0; j < sections.size(); ++j) {
    const double al = alpha.at(sections[j].outlet);
    a.error.push_back(a.flux[j] - al);
    const double scale = al != 0.0 ? std::abs(al) : 1.0;
    if (al != 0.0) a.max_relative = std::max(a.max_relative, std::abs(a.flux[j] - al) / scale);
    for (std::size_t k = 0; k < j; ++k)
      if (sections[k].outlet == sections[j].outlet)
        a.max_pairwise = std::max(a.max_pairwise, std::abs(a.flux[j] - a.flux[k]) / scale);
  }
  return a;
}

}  // namespace

FluxAudit flux_audit(const FlowState& state, const std::vector<CrossSection>& sections) {
  std::vector<double> flux;
  for (const CrossSection& cs : sections)
    flux.push_back(section_flux(*state.space, state.velocity, state.mesh->section(cs.outlet, cs.t)));
  return summarize(sections, std::move(flux), state.outlet_flux);
}

FluxAudit flux_audit(const CarrierField& field, const std::vector<CrossSection>& sections, double tol) {
  std::vector<double> flux, alpha;
  for (const CrossSection& cs : sections) flux.push_back(segment_flux(field, cs.right, cs.left, tol));
  for (int i = 0; i < field.domain().k(); ++i) alpha.push_back(field.outlet_flux(i));
  return summarize(sections, std::move(flux), alpha);
}

namespace {

// -Laplace w = 1 with w = 0 on the boundary, in the P2 space.
Eigen::VectorXd torsion_function(const P2Space& V) {
  const int n = V.num_dofs();
  std::vector<int> index(n, -1);
  int free = 0;
  for (int d = 0; d < n; ++d)
    if (!V.on_boundary(d)) index[d] = free++;
  const P2Tabulation tab(5);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(free);
  for (int e = 0; e < V.mesh().num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(V.mesh(), e);
    Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> f = Eigen::Matrix<double, 6, 1>::Zero();
    for (int q = 0; q < tab.size(); ++q) {
      const auto dN = tab.gradients(q, g);
      K += tab.weight(q) * g.area * dN * dN.transpose();
      f += tab.weight(q) * g.area * tab.values(q);
    }
    const auto& dofs = V.element_dofs(e);
    for (int a = 0; a < 6; ++a) {
      const int ia = index[dofs[a]];
      if (ia < 0) continue;
      b[ia] += f[a];
      for (int c = 0; c < 6; ++c)
        if (index[dofs[c]] >= 0) trip.emplace_back(ia, index[dofs[c]], K(a, c));
    }
  }
  Eigen::SparseMatrix<double> K(free, free);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::LinearSolveFailure, "torsion problem");
  const Eigen::VectorXd x = ldlt.solve(b);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int d = 0; d < n; ++d)
    if (index[d] >= 0) w[d] = x[index[d]];
  return w;
}

struct Norms {
  double grad2 = 0.0, sym2 = 0.0, vp = 0.0, gradp = 0.0;
};

Norms field_norms(const P2Space& V, const Eigen::VectorXd& c, double p, const P2Tabulation& tab) {
  Norms out;
  for (int e = 0; e < V.mesh().num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(V.mesh(), e);
    for (int q = 0; q < tab.size(); ++q) {
      const VelocitySample s = sample_velocity(V, c, e, tab, q, g);
      const double w = tab.weight(q) * g.area;
      out.grad2 += w * s.grad.squaredNorm();
      out.sym2 += w * sym(s.grad).squaredNorm();
      out.vp += w * std::pow(s.v.norm(), p);
      out.gradp += w * std::pow(s.grad.norm(), p);
    }
  }
  return out;
}

}  // namespace

KornPoincare korn_poincare_check(const std::shared_ptr<const Mesh>& mesh, int samples, std::uint64_t seed, double p) {
  const P2Space V(mesh);
  const int n = V.num_dofs();
  const P2Tabulation tab(5);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  KornPoincare out;
  const Eigen::VectorXd w = torsion_function(V);
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
    for (int d = 0; d < n; ++d)
      if (!V.on_boundary(d)) {
        c[d] = normal(rng);
        c[n + d] = normal(rng);
      }
    Norms nm = field_norms(V, c, p, tab);
    if (nm.sym2 > 0.0) out.max_korn = std::max(out.max_korn, nm.grad2 / (2.0 * nm.sym2));

    // smooth sample: w(x) * sum of a few plane waves with |wavevector| <= 1
    struct Wave {
      Eigen::Vector2d k, amp;
      double phase;
    };
    std::vector<Wave> waves(6);
    for (Wave& wv : waves) {
      const double r = unit(rng), th = 2.0 * std::numbers::pi * unit(rng);
      wv.k = r * Eigen::Vector2d(std::cos(th), std::sin(th));
      wv.amp = Eigen::Vector2d(normal(rng), normal(rng));
      wv.phase = 2.0 * std::numbers::pi * unit(rng);
    }
    for (int d = 0; d < n; ++d) {
      const Point x = V.dof_point(d);
      Eigen::Vector2d g = Eigen::Vector2d::Zero();
      for (const Wave& wv : waves) g += wv.amp * std::cos(wv.k.dot(x) + wv.phase);
      c[d] = w[d] * g.x();
      c[n + d] = w[d] * g.y();
    }
    nm = field_norms(V, c, p, tab);
    if (nm.gradp > 0.0) out.max_poincare = std::max(out.max_poincare, std::pow(nm.vp / nm.gradp, 1.0 / p));
    ++out.samples;
  }
  return out;
}

double energy_residual(const FlowState& state, const Forcing& forcing) {
  const P2Space& V = *state.space;
  const Mesh& m = *state.mesh;
  const Eigen::VectorXd u = state.u();
  const P2Tabulation tab(5);
  const bool conv = state.config.include_convection;
  const double p = state.config.p, eps = state.epsilon;
  std::vector<double> lhs(m.num_triangles()), rhs(m.num_triangles()), scale(m.num_triangles());
#pragma omp parallel for schedule(static)
  for (int e = 0; e < m.num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(m, e);
    const auto& tri = m.triangles[e];
    const Eigen::Vector3d P(state.pressure[tri[0]], state.pressure[tri[1]], state.pressure[tri[2]]);
    double l = 0.0, r = 0.0, s = 0.0;
    for (int q = 0; q < tab.size(); ++q) {
      const double w = tab.weight(q) * g.area;
      const VelocitySample v = sample_velocity(V, state.velocity, e, tab, q, g);
      const VelocitySample uu = sample_velocity(V, u, e, tab, q, g);
      const VelocitySample a = sample_velocity(V, state.lift, e, tab, q, g);
      const Eigen::Matrix2d S = stress(sym(v.grad), p, eps);
      const double work = (S.array() * sym(uu.grad).array()).sum();
      l += w * work;
      s += w * std::abs(work);
      if (conv) l += w * 0.5 * ((v.grad * v.v).dot(uu.v) - (uu.grad * v.v).dot(v.v));
      r -= w * tab.lambda(q).dot(P) * a.grad.trace();
      if (forcing) r += w * forcing(g.map(tab.lambda(q)), e).dot(uu.v);
    }
    lhs[e] = l;
    rhs[e] = r;
    scale[e] = s;
  }
  double L = 0.0, R = 0.0, S = 0.0;
  for (int e = 0; e < m.num_triangles(); ++e) {
    L += lhs[e];
    R += rhs[e];
    S += scale[e];
  }
  return S > 0.0 ? std::abs(L - R) / S : 0.0;
}

CarrierReport verify_carrier(const CarrierField& field, double p, const std::vector<double>& t_list,
                             const ProbeOptions& options) {
  if (!(p >= 2.0)) throw Error(ErrorCode::UnsupportedExponent, "p = " + std::to_string(p) + " < 2");
  if (t_list.empty()) throw Error(ErrorCode::ConfigError, "empty t list");
  for (std::size_t j = 1; j < t_list.size(); ++j)
    if (!(t_list[j] > t_list[j - 1])) throw Error(ErrorCode::ConfigError, "t list must be increasing");
  const double pp = p / (p - 1.0);
  const DomainPtr& domain = field.domain_ptr();
  const Mesh root = mesh_cut_domain(cut_domain(domain, t_list.back()), options.h);
  CarrierReport report;
  report.p = p;
  const P2Tabulation tab(5);
  for (double t : t_list) {
    auto mesh = std::make_shared<const Mesh>(t == t_list.back() ? root : submesh(root, t));
    auto space = std::make_shared<const P2Space>(mesh);
    const int nt = mesh->num_triangles();
    const int n = space->num_dofs(), nv = space->num_vertices();

    CarrierRow row;
    row.t = t;
    std::vector<double> a_pow(static_cast<std::size_t>(nt) * tab.size());
    double grad_all = 0.0, grad_annulus = 0.0;
    for (int e = 0; e < nt; ++e) {
      const ElementGeometry g = element_geometry(*mesh, e);
      const MeshRegion& reg = mesh->regions[mesh->triangle_region[e]];
      const bool annulus = reg.outlet >= 0 && reg.s_lo >= t - 1.0 - 1e-9;
      for (int q = 0; q < tab.size(); ++q) {
        const CarrierSample cs = field.eval(g.map(tab.lambda(q)));
        a_pow[static_cast<std::size_t>(e) * tab.size() + q] = std::pow(cs.a.norm(), pp);
        const double gp = tab.weight(q) * g.area * std::pow(cs.grad.norm(), p);
        grad_all += gp;
        if (annulus) grad_annulus += gp;
      }
    }
    row.annulus_ii = grad_annulus;
    row.ratio_iii = grad_all / (t + 1.0);

    auto table = std::make_shared<std::vector<Eigen::Vector2d>>(nt, Eigen::Vector2d::Zero());
    const Assembler stokes(space, 2.0, 0.0, false, [table](const Point&, int tri) { return (*table)[tri]; });
    Eigen::SparseMatrix<double> J;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(stokes.size());
    stokes.assemble(zero, Linearization::Newton, nullptr, &J);
    SparseLU lu;
    lu.factorize(J);

    std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(std::llround(1000.0 * t)));
    std::normal_distribution<double> normal;
    const double weight_t = std::pow(t, (p - 2.0) / (p - 1.0));
    for (int j = 0; j < options.count; ++j) {
      std::vector<Eigen::Vector2d> per_region(mesh->regions.size());
      for (auto& f : per_region) f = Eigen::Vector2d(normal(rng), normal(rng));
      for (int e = 0; e < nt; ++e) (*table)[e] = per_region[mesh->triangle_region[e]];
      const Eigen::VectorXd phi = lu.solve(-stokes.residual(zero)).head(2 * n);

      double num = 0.0, gradp = 0.0, grad2 = 0.0;
      Eigen::VectorXd div_moment = Eigen::VectorXd::Zero(nv), hat2 = Eigen::VectorXd::Zero(nv);
      for (int e = 0; e < nt; ++e) {
        const ElementGeometry g = element_geometry(*mesh, e);
        const auto& tri = mesh->triangles[e];
        for (int q = 0; q < tab.size(); ++q) {
          const double w = tab.weight(q) * g.area;
          const VelocitySample s = sample_velocity(*space, phi, e, tab, q, g);
          num += w * a_pow[static_cast<std::size_t>(e) * tab.size() + q] * std::pow(s.v.norm(), pp);
          gradp += w * std::pow(s.grad.norm(), p);
          grad2 += w * s.grad.squaredNorm();
          for (int i = 0; i < 3; ++i) div_moment[tri[i]] += w * tab.lambda(q)[i] * s.grad.trace();
        }
        for (int i = 0; i < 3; ++i) hat2[tri[i]] += g.area / 6.0;
      }
      double div = 0.0;
      if (grad2 > 0.0)
        for (int v = 0; v < nv; ++v) div = std::max(div, std::abs(div_moment[v]) / (std::sqrt(grad2) * std::sqrt(hat2[v])));
      row.max_probe_divergence = std::max(row.max_probe_divergence, div);
      if (div > 1e-8) throw Error(ErrorCode::InvalidProbe, "probe " + std::to_string(j) + " has divergence residual " + std::to_string(div));
      const double den = weight_t * std::pow(gradp, pp / p);
      if (den > 0.0) row.ratio_i = std::max(row.ratio_i, num / den);
    }
    report.rows.push_back(row);
  }
  double lo = report.rows[0].ratio_i, hi = lo;
  for (const CarrierRow& r : report.rows) {
    lo = std::min(lo, r.ratio_i);
    hi = std::max(hi, r.ratio_i);
  }
  report.spread_i = hi == 0.0 ? 1.0 : (lo > 0.0 ? hi / lo : INFINITY);
  double early = report.rows[0].ratio_i;
  if (report.rows.size() > 1) early = std::max(early, report.rows[1].ratio_i);
  for (const CarrierRow& r : report.rows) report.bounded = report.bounded && r.ratio_i <= 3.0 * early;
  return report;
}

void write_carrier_csv(const CarrierReport& report, std::ostream& out) {
  out << "t,ratio_i,annulus_ii,ratio_iii\n" << std::setprecision(10);
  for (const CarrierRow& r : report.rows) out << r.t << ',' << r.ratio_i << ',' << r.annulus_ii << ',' << r.ratio_iii << '\n';
}

}  // namespace pflux
