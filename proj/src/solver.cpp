#include "pflux/solver.hpp"

#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace pflux {

void SolverConfig::validate() const {
  if (!(p >= 2.0)) throw Error(ErrorCode::UnsupportedExponent, "p = " + std::to_string(p) + " < 2");
  if (epsilon && !(*epsilon >= 0.0)) throw Error(ErrorCode::ConfigError, "epsilon must be nonnegative");
  if (!(picard_tol > 0.0 && picard_tol < 1.0)) throw Error(ErrorCode::ConfigError, "picard_tol must lie in (0, 1)");
  if (!(newton_tol > 0.0 && newton_tol < 1.0)) throw Error(ErrorCode::ConfigError, "newton_tol must lie in (0, 1)");
  if (max_iters < 1) throw Error(ErrorCode::ConfigError, "max_iters must be positive");
  if (!(damping.shrink > 0.0 && damping.shrink < 1.0)) throw Error(ErrorCode::ConfigError, "line-search shrink must lie in (0, 1)");
  if (!(damping.min_step > 0.0 && damping.min_step <= 1.0)) throw Error(ErrorCode::ConfigError, "line-search min_step must lie in (0, 1]");
}

namespace {

double viscosity(double norm_d, double p, double eps) { return eps + (p == 2.0 ? 1.0 : std::pow(norm_d, p - 2.0)); }

}  // namespace

Eigen::Matrix2d stress(const Eigen::Matrix2d& D, double p, double epsilon) {
  if (!(p >= 2.0)) throw Error(ErrorCode::UnsupportedExponent, "p = " + std::to_string(p) + " < 2");
  return viscosity(D.norm(), p, epsilon) * D;
}

MonotonicityGap monotonicity_gap(const Eigen::Matrix2d& x, const Eigen::Matrix2d& y, double p) {
  const Eigen::Matrix2d d = x - y;
  const Eigen::Matrix2d s = stress(x, p, 0.0) - stress(y, p, 0.0);
  return {(s.array() * d.array()).sum(), std::pow(d.norm(), p)};
}

Assembler::Assembler(std::shared_ptr<const P2Space> space, double p, double epsilon, bool convection, Forcing forcing)
    : space_(std::move(space)), p_(p), eps_(epsilon), convection_(convection), forcing_(std::move(forcing)) {
  if (!(p_ >= 2.0)) throw Error(ErrorCode::UnsupportedExponent, "p = " + std::to_string(p_) + " < 2");
  if (!(eps_ >= 0.0)) throw Error(ErrorCode::ConfigError, "epsilon must be nonnegative");
  build_pattern();
}

std::array<int, 15> Assembler::local_rows(int tri) const {
  const int n = space_->num_dofs();
  const auto& dofs = space_->element_dofs(tri);
  const auto& vt = space_->mesh().triangles[tri];
  std::array<int, 15> rows;
  for (int k = 0; k < 6; ++k) {
    rows[k] = dofs[k];
    rows[6 + k] = n + dofs[k];
  }
  for (int j = 0; j < 3; ++j) rows[12 + j] = 2 * n + vt[j];
  return rows;
}

void Assembler::build_pattern() {
  const int n = space_->num_dofs();
  const int N = size();
  fixed_.assign(N, 0);
  for (int d = 0; d < n; ++d)
    if (space_->on_boundary(d)) fixed_[d] = fixed_[n + d] = 1;
  fixed_[2 * n] = 1;  // pressure pinned at vertex 0 during the solve
  std::vector<Eigen::Triplet<double>> trip;
  const int nt = space_->mesh().num_triangles();
  trip.reserve(static_cast<std::size_t>(nt) * 200);
  for (int t = 0; t < nt; ++t) {
    const auto rows = local_rows(t);
    for (int a = 0; a < 15; ++a) {
      if (fixed_[rows[a]]) continue;
      for (int b = 0; b < 15; ++b)
        if (!fixed_[rows[b]]) trip.emplace_back(rows[a], rows[b], 1.0);
    }
  }
  for (int i = 0; i < N; ++i)
    if (fixed_[i]) trip.emplace_back(i, i, 1.0);
  pattern_.resize(N, N);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
}

void Assembler::element(int tri, const Eigen::VectorXd& x, Linearization lin, LocalVec& r, Local* K) const {
  const P2Space& S = *space_;
  const int n = S.num_dofs();
  const auto& dofs = S.element_dofs(tri);
  const auto& vt = S.mesh().triangles[tri];
  const ElementGeometry g = element_geometry(S.mesh(), tri);
  Eigen::Matrix<double, 6, 2> c;
  for (int k = 0; k < 6; ++k) {
    c(k, 0) = x[dofs[k]];
    c(k, 1) = x[n + dofs[k]];
  }
  const Eigen::Vector3d P(x[2 * n + vt[0]], x[2 * n + vt[1]], x[2 * n + vt[2]]);
  r.setZero();
  if (K) K->setZero();
  for (int q = 0; q < tab_.size(); ++q) {
    const double w = tab_.weight(q) * g.area;
    const auto& N = tab_.values(q);
    const Eigen::Matrix<double, 6, 2> dN = tab_.gradients(q, g);
    const Eigen::Vector3d& lam = tab_.lambda(q);
    const Eigen::Vector2d v = c.transpose() * N;
    const Eigen::Matrix2d G = c.transpose() * dN;
    const Eigen::Matrix2d D = sym(G);
    const double nD = D.norm();
    if (!std::isfinite(nD) || nD > 1e100) throw Error(ErrorCode::NumericalBlowup, "|D| overflow in element " + std::to_string(tri));
    const double nu = viscosity(nD, p_, eps_);
    const Eigen::Matrix2d Sd = nu * D;
    const double divv = G.trace();
    const double Pq = lam.dot(P);
    const Eigen::Vector2d f = forcing_ ? forcing_(g.map(lam), tri) : Eigen::Vector2d::Zero();
    const Eigen::Vector2d Gv = G * v;
    const Eigen::Matrix<double, 6, 1> vgradN = dN * v;
    for (int cc = 0; cc < 2; ++cc)
      for (int k = 0; k < 6; ++k) {
        double val = Sd.row(cc).dot(dN.row(k)) - Pq * dN(k, cc) - f[cc] * N[k];
        if (convection_) val += 0.5 * Gv[cc] * N[k] - 0.5 * vgradN[k] * v[cc];
        r[6 * cc + k] += w * val;
      }
    for (int j = 0; j < 3; ++j) r[12 + j] -= w * lam[j] * divv;
    if (!K) continue;

    const double ncoef = (lin == Linearization::Newton && p_ > 2.0 && nD >= 1e-14) ? (p_ - 2.0) * std::pow(nD, p_ - 4.0) : 0.0;
    const Eigen::Matrix<double, 6, 2> DdN = dN * D;
    const Eigen::Matrix<double, 6, 6> gg = dN * dN.transpose();
    for (int cc = 0; cc < 2; ++cc)
      for (int k = 0; k < 6; ++k)
        for (int d = 0; d < 2; ++d)
          for (int m = 0; m < 6; ++m) {
            double a = 0.5 * nu * ((cc == d ? gg(k, m) : 0.0) + dN(m, cc) * dN(k, d));
            a += ncoef * DdN(m, d) * DdN(k, cc);
            if (convection_) {
              if (cc == d) a += 0.5 * (vgradN[m] * N[k] - vgradN[k] * N[m]);
              if (lin == Linearization::Newton) a += 0.5 * N[m] * (G(cc, d) * N[k] - dN(k, d) * v[cc]);
            }
            (*K)(6 * cc + k, 6 * d + m) += w * a;
          }
    for (int cc = 0; cc < 2; ++cc)
      for (int k = 0; k < 6; ++k)
        for (int j = 0; j < 3; ++j) {
          const double b = -w * lam[j] * dN(k, cc);
          (*K)(6 * cc + k, 12 + j) += b;
          (*K)(12 + j, 6 * cc + k) += b;
        }
  }
}

void Assembler::scatter(int tri, const LocalVec& r, const Local* K, Eigen::VectorXd* residual,
                        Eigen::SparseMatrix<double>* jacobian) const {
  const auto rows = local_rows(tri);
  if (residual)
    for (int a = 0; a < 15; ++a)
      if (!fixed_[rows[a]]) (*residual)[rows[a]] += r[a];
  if (!jacobian || !K) return;
  const int* outer = jacobian->outerIndexPtr();
  const int* inner = jacobian->innerIndexPtr();
  double* values = jacobian->valuePtr();
  for (int b = 0; b < 15; ++b) {
    const int col = rows[b];
    if (fixed_[col]) continue;
    const int* first = inner + outer[col];
    const int* last = inner + outer[col + 1];
    for (int a = 0; a < 15; ++a) {
      if (fixed_[rows[a]]) continue;
      const int* pos = std::lower_bound(first, last, rows[a]);
      values[pos - inner] += (*K)(a, b);
    }
  }
}

void Assembler::assemble(const Eigen::VectorXd& x, Linearization lin, Eigen::VectorXd* residual,
                         Eigen::SparseMatrix<double>* jacobian) const {
  const int N = size();
  if (x.size() != N) throw Error(ErrorCode::ConfigError, "state size does not match the discrete space");
  if (residual) residual->setZero(N);
  if (jacobian) {
    *jacobian = pattern_;
    std::fill(jacobian->valuePtr(), jacobian->valuePtr() + jacobian->nonZeros(), 0.0);
    for (int i = 0; i < N; ++i)
      if (fixed_[i]) jacobian->coeffRef(i, i) = 1.0;
  }
  const int nt = space_->mesh().num_triangles();
  constexpr int kChunk = 1024;
  std::vector<LocalVec> rs(kChunk);
  std::vector<Local> Ks(jacobian ? kChunk : 0);
  for (int start = 0; start < nt; start += kChunk) {
    const int end = std::min(nt, start + kChunk);
    int failed = -1;
    std::string message;
#pragma omp parallel for schedule(static)
    for (int e = start; e < end; ++e) {
      try {
        element(e, x, lin, rs[e - start], jacobian ? &Ks[e - start] : nullptr);
      } catch (const std::exception& ex) {
#pragma omp critical(pflux_assembly_error)
        if (failed < 0 || e < failed) {
          failed = e;
          message = ex.what();
        }
      }
    }
    if (failed >= 0) throw Error(ErrorCode::NumericalBlowup, message);
    for (int e = start; e < end; ++e) scatter(e, rs[e - start], jacobian ? &Ks[e - start] : nullptr, residual, jacobian);
  }
}

void Assembler::assemble_serial(const Eigen::VectorXd& x, Linearization lin, Eigen::VectorXd* residual,
                                Eigen::SparseMatrix<double>* jacobian) const {
  const int N = size();
  if (residual) residual->setZero(N);
  std::vector<Eigen::Triplet<double>> trip;
  LocalVec r;
  Local K;
  for (int e = 0; e < space_->mesh().num_triangles(); ++e) {
    element(e, x, lin, r, jacobian ? &K : nullptr);
    const auto rows = local_rows(e);
    for (int a = 0; a < 15; ++a) {
      if (fixed_[rows[a]]) continue;
      if (residual) (*residual)[rows[a]] += r[a];
      if (jacobian)
        for (int b = 0; b < 15; ++b)
          if (!fixed_[rows[b]]) trip.emplace_back(rows[a], rows[b], K(a, b));
    }
  }
  if (jacobian) {
    for (int i = 0; i < N; ++i)
      if (fixed_[i]) trip.emplace_back(i, i, 1.0);
    jacobian->resize(N, N);
    jacobian->setFromTriplets(trip.begin(), trip.end());
  }
}

Eigen::VectorXd Assembler::residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r;
  assemble(x, Linearization::Picard, &r, nullptr);
  return r;
}

double Assembler::energy(const Eigen::VectorXd& x) const {
  const P2Space& S = *space_;
  const int nt = S.mesh().num_triangles();
  std::vector<double> part(nt, 0.0);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < nt; ++e) {
    const ElementGeometry g = element_geometry(S.mesh(), e);
    double sum = 0.0;
    for (int q = 0; q < tab_.size(); ++q) {
      const VelocitySample s = sample_velocity(S, x, e, tab_, q, g);
      const double nD = sym(s.grad).norm();
      double val = 0.5 * eps_ * nD * nD + std::pow(nD, p_) / p_;
      if (forcing_) val -= forcing_(g.map(tab_.lambda(q)), e).dot(s.v);
      sum += tab_.weight(q) * val;
    }
    part[e] = sum * g.area;
  }
  double total = 0.0;
  for (double v : part) total += v;
  return total;
}

double p1_mean(const Mesh& mesh, const Eigen::VectorXd& values) {
  double integral = 0.0, area = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles[e];
    const double a = mesh.triangle_area(e);
    integral += a * (values[t[0]] + values[t[1]] + values[t[2]]) / 3.0;
    area += a;
  }
  return integral / area;
}

Eigen::VectorXd FlowState::packed() const {
  Eigen::VectorXd x(velocity.size() + pressure.size());
  x << velocity, pressure;
  return x;
}

double section_flux(const P2Space& space, const Eigen::VectorXd& velocity, const std::vector<Edge>& edges) {
  const int n = space.num_dofs();
  auto v = [&](int d) { return Eigen::Vector2d(velocity[d], velocity[n + d]); };
  double flux = 0.0;
  for (const Edge& e : edges) {
    const int m = space.edge_dof(e[0], e[1]);
    if (m < 0) throw Error(ErrorCode::SectionNotAligned, "section edge is not a mesh edge");
    const Point d = space.mesh().vertices[e[1]] - space.mesh().vertices[e[0]];
    flux += (v(e[0]) + 4.0 * v(m) + v(e[1])).dot(Eigen::Vector2d(d.y(), -d.x())) / 6.0;
  }
  return flux;
}

Eigen::VectorXd carrier_lift(const P2Space& space, const CarrierField& carrier) {
  const int n = space.num_dofs();
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(2 * n);
  for (int d = 0; d < n; ++d) {
    if (space.boundary_class(d) == 0) continue;
    const Eigen::Vector2d a = carrier(space.dof_point(d));
    lift[d] = a.x();
    lift[n + d] = a.y();
  }
  const Mesh& mesh = space.mesh();
  for (int i = 0; i < mesh.domain->k(); ++i) {
    const double F = section_flux(space, lift, mesh.section(i, mesh.t));
    const double alpha = carrier.outlet_flux(i);
    if (std::abs(F) <= 1e-14) {
      if (std::abs(alpha) > 1e-12)
        throw Error(ErrorCode::FluxImbalance, "interpolated carrier has no flux through cut face " + std::to_string(i));
      continue;
    }
    const double scale = alpha / F;
    for (int d = 0; d < n; ++d)
      if (space.boundary_class(d) == 1 + i) {
        lift[d] *= scale;
        lift[n + d] *= scale;
      }
  }
  return lift;
}

struct SparseLU::Impl {
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> umf;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> fallback;
  bool analyzed = false;
  bool use_fallback = false;
  Eigen::Index nnz = -1;
};

SparseLU::SparseLU() : impl_(std::make_unique<Impl>()) {}
SparseLU::~SparseLU() = default;

void SparseLU::factorize(const Eigen::SparseMatrix<double>& A) {
  Impl& I = *impl_;
  if (!I.analyzed || I.nnz != A.nonZeros()) {
    // the pattern is structurally symmetric after Dirichlet elimination
    I.umf.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    I.umf.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
    I.umf.analyzePattern(A);
    I.analyzed = I.umf.info() == Eigen::Success;
    I.nnz = A.nonZeros();
  }
  if (I.analyzed) I.umf.factorize(A);
  if (I.analyzed && I.umf.info() == Eigen::Success) {
    I.use_fallback = false;
    return;
  }
  I.fallback.compute(A);
  if (I.fallback.info() != Eigen::Success)
    throw Error(ErrorCode::LinearSolveFailure, "sparse LU factorization failed: " + I.fallback.lastErrorMessage());
  I.use_fallback = true;
}

Eigen::VectorXd SparseLU::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = impl_->use_fallback ? Eigen::VectorXd(impl_->fallback.solve(b)) : Eigen::VectorXd(impl_->umf.solve(b));
  if (!x.allFinite()) throw Error(ErrorCode::LinearSolveFailure, "non-finite solution of the saddle-point system");
  return x;
}

FlowState solve_truncated(const CutDomain& cd, std::shared_ptr<const Mesh> mesh, const CarrierField& carrier,
                          const SolverConfig& config, const SolveOptions& options) {
  config.validate();
  if (std::abs(cd.t - mesh->t) > 1e-9) throw Error(ErrorCode::ConfigError, "mesh and cut domain have different t");
  FlowState st;
  st.mesh = mesh;
  st.config = config;
  st.epsilon = config.epsilon_for(mesh->t);
  auto space = std::make_shared<const P2Space>(mesh);
  st.space = space;
  const int n = space->num_dofs(), nv = space->num_vertices();
  st.lift = carrier_lift(*space, carrier);
  for (int i = 0; i < mesh->domain->k(); ++i) st.outlet_flux.push_back(carrier.outlet_flux(i));
  const Assembler A(space, config.p, st.epsilon, config.include_convection, options.forcing);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.size());
  x.head(2 * n) = st.lift;
  const double r0 = A.residual(x).norm();
  if (r0 == 0.0) {
    st.velocity = st.lift;
    st.pressure = Eigen::VectorXd::Zero(nv);
    st.history.push_back({0, Linearization::Picard, 0.0, 0.0});
    return st;
  }
  if (options.initial_u) {
    if (options.initial_u->size() != 2 * n) throw Error(ErrorCode::ConfigError, "initial velocity has the wrong size");
    for (int d = 0; d < n; ++d)
      if (!space->on_boundary(d)) {
        x[d] += (*options.initial_u)[d];
        x[n + d] += (*options.initial_u)[n + d];
      }
  }
  if (options.initial_pressure) {
    if (options.initial_pressure->size() != nv) throw Error(ErrorCode::ConfigError, "initial pressure has the wrong size");
    x.segment(2 * n, nv) = *options.initial_pressure;
  }

  // convection off: the problem is a constrained minimization, so the energy is the merit
  const bool energy_merit = !config.include_convection;
  Linearization phase = Linearization::Picard;
  SparseLU lu;
  Eigen::VectorXd r = A.residual(x), r_trial;
  Eigen::SparseMatrix<double> J;
  double last_step = 0.0;
  bool polished = false;
  for (int it = 0;; ++it) {
    const double rel = r.norm() / r0;
    if (!std::isfinite(rel)) throw SolveFailure(ErrorCode::NumericalBlowup, "non-finite residual", st.history);
    st.history.push_back({it, phase, rel, last_step});
    if (rel <= config.newton_tol && it > 0) {
      // one undamped Newton step past the tolerance, kept only if it helps
      if (phase == Linearization::Newton && !polished && rel > 1e-14) {
        polished = true;
        A.assemble(x, Linearization::Newton, nullptr, &J);
        lu.factorize(J);
        const Eigen::VectorXd y = x + lu.solve(-r);
        r_trial = A.residual(y);
        if (r_trial.norm() < r.norm()) {
          x = y;
          r.swap(r_trial);
          last_step = 1.0;
          continue;
        }
      }
      break;
    }
    if (it >= config.max_iters)
      throw SolveFailure(ErrorCode::NonlinearDivergence,
                         "no convergence in " + std::to_string(config.max_iters) + " iterations, residual " + std::to_string(rel),
                         st.history);
    if (phase == Linearization::Picard && rel <= config.picard_tol) phase = Linearization::Newton;

    auto direction = [&](Linearization lin) {
      A.assemble(x, lin, nullptr, &J);
      lu.factorize(J);
      return Eigen::VectorXd(lu.solve(-r));
    };
    Eigen::VectorXd dx = direction(phase);
    double theta = 1.0;
    if (it == 0) {
      // the first step is taken in full: it projects onto the discrete divergence constraint
      r_trial = A.residual(x + dx);
    } else {
      const double m0 = energy_merit ? A.energy(x) : r.norm();
      auto acceptable = [&](double th) {
        const Eigen::VectorXd y = x + th * dx;
        r_trial = A.residual(y);
        if (!energy_merit) return std::isfinite(r_trial.norm()) && r_trial.norm() <= m0;
        const double m = A.energy(y);
        if (!std::isfinite(m)) return false;
        // energy differences below roundoff: fall back to the residual
        return m <= m0 || (m - m0 <= 1e-13 * std::max(1.0, std::abs(m0)) && r_trial.norm() < r.norm());
      };
      auto search = [&] {
        theta = 1.0;
        while (theta >= config.damping.min_step && !acceptable(theta)) theta *= config.damping.shrink;
      };
      search();
      if (theta < config.damping.min_step && phase == Linearization::Newton) {
        phase = Linearization::Picard;
        dx = direction(phase);
        search();
      }
      if (theta < config.damping.min_step)
        throw SolveFailure(ErrorCode::NonlinearDivergence, "line search failed at residual " + std::to_string(rel), st.history);
    }
    x += theta * dx;
    r.swap(r_trial);
    last_step = theta;
  }
  st.velocity = x.head(2 * n);
  st.pressure = x.segment(2 * n, nv);
  st.pressure.array() -= p1_mean(*mesh, st.pressure);
  return st;
}

void write_convergence_csv(const FlowState& state, std::ostream& out) {
  out << "iter,phase,residual,step\n";
  out << std::setprecision(10);
  for (const auto& h : state.history)
    out << h.iter << ',' << (h.phase == Linearization::Picard ? "picard" : "newton") << ',' << h.residual << ',' << h.step
        << '\n';
}

void write_vtk(const FlowState& state, std::ostream& out) {
  const Mesh& m = *state.mesh;
  const P2Space& S = *state.space;
  const int n = S.num_dofs();
  out << "# vtk DataFile Version 3.0\npflux flow state\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(10);
  out << "POINTS " << m.num_vertices() << " double\n";
  for (const Point& p : m.vertices) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& t : m.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << m.num_triangles() << '\n';
  for (int i = 0; i < m.num_triangles(); ++i) out << "5\n";
  out << "POINT_DATA " << m.num_vertices() << "\nVECTORS velocity double\n";
  for (int v = 0; v < m.num_vertices(); ++v) out << state.velocity[v] << ' ' << state.velocity[n + v] << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < m.num_vertices(); ++v) out << state.pressure[v] << '\n';
  out << "CELL_DATA " << m.num_triangles() << "\nSCALARS strain_rate double 1\nLOOKUP_TABLE default\n";
  std::vector<double> nd(m.num_triangles());
  const Eigen::Vector3d centre(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  for (int e = 0; e < m.num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(m, e);
    const auto& dofs = S.element_dofs(e);
    const Eigen::Matrix<double, 6, 2> dN = p2_lambda_derivatives(centre) * g.grad_lambda;
    Eigen::Matrix2d G = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 6; ++k) {
      G.row(0) += state.velocity[dofs[k]] * dN.row(k);
      G.row(1) += state.velocity[n + dofs[k]] * dN.row(k);
    }
    nd[e] = sym(G).norm();
    out << nd[e] << '\n';
  }
  out << "SCALARS stress_norm double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < m.num_triangles(); ++e) out << viscosity(nd[e], state.config.p, state.epsilon) * nd[e] << '\n';
}

}  // namespace pflux
