#include <doctest.h>

#include "pflux/solver.hpp"

#include <cmath>
#include <random>

using namespace pflux;

namespace {

struct Setup {
  CutDomain cd;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const P2Space> space;
};

Setup make_setup(const DomainPtr& d, double t, double h) {
  Setup s{cut_domain(d, t), nullptr, nullptr};
  s.mesh = std::make_shared<const Mesh>(mesh_cut_domain(s.cd, h));
  s.space = std::make_shared<const P2Space>(s.mesh);
  return s;
}

Eigen::Matrix2d random_tensor(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::Matrix2d m;
  m << g(rng), g(rng), g(rng), g(rng);
  return m;
}

}  // namespace

TEST_CASE("stress law") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Matrix2d D = sym(random_tensor(rng, 1.0));
    CHECK((stress(D, 2.0, 0.0) - D).norm() < 1e-15);
    CHECK((stress(D, 2.0, 0.1) - 1.1 * D).norm() < 1e-14);
    const Eigen::Matrix2d D2 = 2.0 * D / D.norm();
    CHECK((stress(D2, 3.0, 0.0) - 2.0 * D2).norm() < 1e-14);
  }
  SolverConfig c;
  CHECK(c.epsilon_for(10.0) == doctest::Approx(0.1));
  c.epsilon = 0.0;
  CHECK(c.epsilon_for(10.0) == 0.0);
  try {
    stress(Eigen::Matrix2d::Identity(), 1.5, 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedExponent);
  }
}

TEST_CASE("monotonicity gap") {
  std::mt19937_64 rng(2);
  const Eigen::Matrix2d x = random_tensor(rng, 1.0);
  CHECK(monotonicity_gap(x, x, 3.0).gap == 0.0);
  const auto g2 = monotonicity_gap(x, -x, 2.0);
  CHECK(g2.gap == doctest::Approx(4.0 * x.squaredNorm()));
  CHECK(g2.gap / g2.comparator == doctest::Approx(1.0));
  double min_ratio = 1e300;
  for (int i = 0; i < 100000; ++i) {
    const Eigen::Matrix2d a = random_tensor(rng, 1.0), b = random_tensor(rng, 1.0);
    const auto g = monotonicity_gap(a, b, 4.0);
    min_ratio = std::min(min_ratio, g.gap / g.comparator);
  }
  CHECK(min_ratio > 0.0);
}

TEST_CASE("P2 space") {
  const Setup s = make_setup(shapes::strip(), 1.0, 0.25);
  const P2Space& V = *s.space;
  const Mesh& m = *s.mesh;
  // Euler: E = V + T - 1 for a simply connected triangulation
  CHECK(static_cast<int>(V.edges().size()) == m.num_vertices() + m.num_triangles() - 1);
  int boundary_edges = 0;
  for (int d = V.num_vertices(); d < V.num_dofs(); ++d) boundary_edges += V.on_boundary(d);
  CHECK(boundary_edges == static_cast<int>(m.boundary_edges.size()));

  // quadratic fields are reproduced exactly by their interpolant
  auto f = [](const Point& x) { return 1.0 + 2.0 * x.x() - x.y() + 0.5 * x.x() * x.x() - 3.0 * x.x() * x.y() + x.y() * x.y(); };
  auto grad_f = [](const Point& x) { return Eigen::Vector2d(2.0 + x.x() - 3.0 * x.y(), -1.0 - 3.0 * x.x() + 2.0 * x.y()); };
  const int n = V.num_dofs();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
  for (int d = 0; d < n; ++d) c[d] = f(V.dof_point(d));
  const P2Tabulation tab;
  double err = 0.0;
  for (int e = 0; e < m.num_triangles(); ++e) {
    const ElementGeometry g = element_geometry(m, e);
    CHECK(g.area > 0.0);
    for (int q = 0; q < tab.size(); ++q) {
      const VelocitySample vs = sample_velocity(V, c, e, tab, q, g);
      const Point x = g.map(tab.lambda(q));
      err = std::max(err, std::abs(vs.v.x() - f(x)));
      err = std::max(err, (vs.grad.row(0).transpose() - grad_f(x)).norm());
      CHECK(tab.values(q).sum() == doctest::Approx(1.0));
    }
  }
  CHECK(err < 1e-12);
}

TEST_CASE("assembly") {
  const Setup s = make_setup(shapes::strip(), 1.0, 0.25);
  const int n = s.space->num_dofs();
  SUBCASE("zero state has zero residual") {
    const Assembler A(s.space, 3.0, 0.1, true);
    CHECK(A.residual(Eigen::VectorXd::Zero(A.size())).norm() == 0.0);
  }
  SUBCASE("convection does not change the residual at v = 0") {
    const Assembler on(s.space, 3.0, 0.1, true), off(s.space, 3.0, 0.1, false);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(on.size());
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 2 * n; i < x.size(); ++i) x[i] = g(rng);
    CHECK((on.residual(x) - off.residual(x)).norm() == 0.0);
  }
  SUBCASE("Jacobian matches finite differences") {
    for (bool conv : {false, true})
      for (double p : {2.0, 3.0, 4.5}) {
        const Assembler A(s.space, p, 0.2, conv);
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g;
        Eigen::VectorXd x(A.size()), w(A.size());
        for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
        for (int i = 0; i < w.size(); ++i) w[i] = g(rng);
        for (int d = 0; d < n; ++d)
          if (s.space->on_boundary(d)) w[d] = w[n + d] = 0.0;
        w[2 * n] = 0.0;
        Eigen::VectorXd r;
        Eigen::SparseMatrix<double> J;
        A.assemble(x, Linearization::Newton, &r, &J);
        const double h = 1e-6;
        const Eigen::VectorXd fd = (A.residual(x + h * w) - A.residual(x - h * w)) / (2.0 * h);
        const Eigen::VectorXd jw = J * w;
        CHECK((jw - fd).norm() <= 1e-5 * jw.norm());
      }
  }
  SUBCASE("parallel and serial assembly agree") {
    auto forcing = [](const Point& x, int) { return Eigen::Vector2d(std::sin(x.x()), x.y()); };
    const Assembler A(s.space, 3.0, 0.1, true, forcing);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::VectorXd x(A.size());
    for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
    for (Linearization lin : {Linearization::Picard, Linearization::Newton}) {
      Eigen::VectorXd r1, r2;
      Eigen::SparseMatrix<double> J1, J2;
      A.assemble(x, lin, &r1, &J1);
      A.assemble_serial(x, lin, &r2, &J2);
      CHECK((r1 - r2).norm() <= 1e-12 * r2.norm());
      CHECK(Eigen::SparseMatrix<double>(J1 - J2).norm() <= 1e-12 * J2.norm());
    }
  }
}

TEST_CASE("carrier lift has exact cut-face fluxes") {
  const Setup s = make_setup(shapes::t_junction(), 2.0, 0.125);
  const CarrierField c = build_carrier_2d(s.mesh->domain, {1.0, 2.0, -3.0});
  const Eigen::VectorXd lift = carrier_lift(*s.space, c);
  for (int i = 0; i < 3; ++i)
    CHECK(section_flux(*s.space, lift, s.mesh->section(i, 2.0)) == doctest::Approx(c.outlet_flux(i)).epsilon(1e-12));
  const int n = s.space->num_dofs();
  for (int d = 0; d < n; ++d)
    if (s.space->boundary_class(d) == 0) CHECK(Eigen::Vector2d(lift[d], lift[n + d]).norm() == 0.0);
}

TEST_CASE("truncated solves") {
  SUBCASE("zero flux gives the zero state") {
    const Setup s = make_setup(shapes::t_junction(), 2.0, 0.25);
    const CarrierField c = build_carrier_2d(s.mesh->domain, {0.0, 0.0, 0.0});
    const FlowState st = solve_truncated(s.cd, s.mesh, c, SolverConfig{.p = 3.0});
    CHECK(st.velocity.norm() == 0.0);
    CHECK(st.pressure.norm() == 0.0);
  }
  for (double p : {2.0, 3.0})
    for (bool conv : {false, true}) {
      CAPTURE(p);
      CAPTURE(conv);
      const Setup s = make_setup(shapes::t_junction(), 3.0, 0.125);
      const CarrierField c = build_carrier_2d(s.mesh->domain, {1.0, 2.0, -3.0});
      SolverConfig cfg;
      cfg.p = p;
      cfg.include_convection = conv;
      const FlowState st = solve_truncated(s.cd, s.mesh, c, cfg);
      CHECK(st.history.back().residual <= cfg.newton_tol);
      const P2Space& V = *st.space;
      const int n = V.num_dofs(), nv = V.num_vertices();
      // trace: v equals the lift on every boundary dof
      for (int d = 0; d < n; ++d)
        if (V.on_boundary(d)) {
          CHECK(st.velocity[d] == st.lift[d]);
          CHECK(st.velocity[n + d] == st.lift[n + d]);
        }
      // divergence residual against every pressure basis function, and the gauge
      const Assembler A(st.space, cfg.p, st.epsilon, conv);
      const Eigen::VectorXd r = A.residual(st.packed());
      double grad_norm2 = 0.0, area = 0.0, mean_p = 0.0;
      const P2Tabulation tab;
      for (int e = 0; e < st.mesh->num_triangles(); ++e) {
        const ElementGeometry g = element_geometry(*st.mesh, e);
        for (int q = 0; q < tab.size(); ++q) {
          grad_norm2 += tab.weight(q) * g.area * sample_velocity(V, st.velocity, e, tab, q, g).grad.squaredNorm();
          const auto& tri = st.mesh->triangles[e];
          mean_p += tab.weight(q) * g.area * tab.lambda(q).dot(Eigen::Vector3d(st.pressure[tri[0]], st.pressure[tri[1]], st.pressure[tri[2]]));
        }
        area += g.area;
      }
      CHECK(std::abs(mean_p / area) <= 1e-12);
      // q = pressure hat function: |int q div v| <= 1e-10 |grad v| |q|, with |q| <= sqrt(area) sup
      CHECK(r.segment(2 * n, nv).cwiseAbs().maxCoeff() <= 1e-10 * std::sqrt(grad_norm2) * std::sqrt(area));
      // fluxes through every snapped section
      for (int i = 0; i < 3; ++i)
        for (double sv : st.mesh->snaps[i])
          if (sv >= 1.0)
            CHECK(std::abs(section_flux(V, st.velocity, st.mesh->section(i, sv)) - c.outlet_flux(i)) <=
                  1e-3 * std::abs(c.outlet_flux(i)));
    }
}

TEST_CASE("configuration errors") {
  SolverConfig c;
  c.p = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.newton_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.epsilon = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("non-convergent solve reports its history") {
  const Setup s = make_setup(shapes::strip(), 1.0, 0.25);
  const CarrierField c = build_carrier_2d(s.mesh->domain, {-1.0, 1.0});
  SolverConfig cfg;
  cfg.p = 3.0;
  cfg.max_iters = 2;
  try {
    solve_truncated(s.cd, s.mesh, c, cfg);
    FAIL("expected an error");
  } catch (const SolveFailure& e) {
    CHECK(e.code() == ErrorCode::NonlinearDivergence);
    CHECK(e.history().size() == 3);
  }
}
