#include <doctest.h>

#include "pflux/carrier.hpp"
#include "pflux/error.hpp"
#include "pflux/spherical.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace pflux;

namespace {

// composite Simpson on 4000 panels, independent of the library quadrature
double simpson_flux(const CarrierField& c, const Point& right, const Point& left) {
  const int n = 4000;
  const Point d = left - right;
  const double L = d.norm();
  const Point nrm(d.y() / L, -d.x() / L);
  double sum = 0.0;
  for (int j = 0; j <= 2 * n; ++j) {
    const double w = (j == 0 || j == 2 * n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    sum += w * c(right + d * (static_cast<double>(j) / (2 * n))).dot(nrm);
  }
  return sum * L / (6.0 * n);
}

std::vector<Point> random_interior(const CarrierField& c, double t, int count, unsigned seed) {
  const CutDomain cd = cut_domain(c.domain_ptr(), t);
  Point lo = cd.boundary[0], hi = lo;
  for (const Point& p : cd.boundary) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < count) {
    const Point p(ux(rng), uy(rng));
    if (cd.contains(p) && c.locate(p)) pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("zero fluxes give a zero carrier") {
  const CarrierField c = build_carrier_2d(shapes::t_junction(), {0, 0, 0});
  for (double s : c.stream_constants()) CHECK(s == 0.0);
  for (const Point& p : random_interior(c, 3.0, 300, 1)) {
    const auto v = c.eval(p);
    CHECK(v.a.norm() == 0.0);
    CHECK(v.psi == 0.0);
  }
}

TEST_CASE("strip carrier flux") {
  auto d = shapes::strip();
  const CarrierField c = build_carrier_2d(d, {-1.0, 1.0}, 0.25);
  for (double t : {1.0, 5.0, 10.0}) {
    const CrossSection cs = cross_section(*d, 1, t);
    CHECK(std::abs(simpson_flux(c, cs.right, cs.left) - 1.0) < 1e-10);
    CHECK(std::abs(segment_flux(c, cs.right, cs.left) - 1.0) < 1e-10);
    const CrossSection cs0 = cross_section(*d, 0, t);
    CHECK(std::abs(segment_flux(c, cs0.right, cs0.left) + 1.0) < 1e-10);
  }
}

TEST_CASE("flux exactness on every snapped section") {
  struct Case {
    DomainPtr d;
    std::vector<double> f;
  };
  for (const Case& cs : {Case{shapes::t_junction(), {1.0, 2.0, -3.0}}, Case{shapes::strip(), {0.7, -0.7}},
                         Case{shapes::s_channel(), {-1.0, 1.0}}, Case{shapes::wavy_strip(), {2.0, -2.0}}}) {
    const CarrierField c = build_carrier_2d(cs.d, cs.f);
    for (int i = 0; i < cs.d->k(); ++i) {
      const double alpha = cs.f[cs.d->outlet(i).flux_index];
      for (double s = 0.0; s <= 8.0; s += 1.0) {
        const CrossSection x = cross_section(*cs.d, i, s);
        CHECK(std::abs(segment_flux(c, x.right, x.left) - alpha) < 1e-8);
      }
    }
  }
}

TEST_CASE("wall trace vanishes") {
  for (auto d : {shapes::t_junction(), shapes::s_channel(), shapes::wavy_strip()}) {
    std::vector<double> f(d->k(), 0.0);
    f[0] = 1.5;
    f[1] = -1.5;
    const CarrierField c = build_carrier_2d(d, f);
    const CutDomain cd = cut_domain(d, 6.0);
    double worst = 0.0;
    const std::size_t n = cd.boundary.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (cd.tags[j].kind != BoundaryKind::Wall) continue;
      for (int m = 0; m < 8; ++m) {
        const Point p = cd.boundary[j] + (cd.boundary[(j + 1) % n] - cd.boundary[j]) * (m / 8.0);
        worst = std::max(worst, c(p).norm());
      }
    }
    for (const auto& o : d->outlets())
      for (double s = 0.0; s <= 6.0; s += 0.01)
        for (double side : {-1.0, 1.0})
          worst = std::max(worst, c(o.centerline.position(s) + side * o.halfwidth(s) * o.centerline.normal(s)).norm());
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("divergence and gradient against finite differences") {
  for (auto d : {shapes::t_junction(), shapes::s_channel(), shapes::wavy_strip()}) {
    std::vector<double> f(d->k(), 0.0);
    f[0] = 1.0;
    f[d->k() - 1] = -1.0;
    const CarrierField c = build_carrier_2d(d, f);
    const auto pts = random_interior(c, 6.0, 10000, 7);
    const double h = 1e-6;
    double max_div = 0.0, max_grad_err = 0.0;
    for (const Point& p : pts) {
      const auto ex = c.eval(p);
      const Eigen::Vector2d ax = (c(p + Point(h, 0)) - c(p - Point(h, 0))) / (2 * h);
      const Eigen::Vector2d ay = (c(p + Point(0, h)) - c(p - Point(0, h))) / (2 * h);
      max_div = std::max(max_div, std::abs(ax.x() + ay.y()));
      Eigen::Matrix2d fd;
      fd << ax.x(), ay.x(), ax.y(), ay.y();
      max_grad_err = std::max(max_grad_err, (fd - ex.grad).norm());
      CHECK(std::abs(ex.grad.trace()) < 1e-12 * std::max(1.0, c.sup_grad()));
    }
    CHECK(max_div <= 1e-6 * c.sup_grad());
    CHECK(max_grad_err <= 1e-5 * c.sup_grad());
    CHECK(c.sup_grad() > 0.0);
  }
}

TEST_CASE("carrier is linear in the fluxes") {
  auto d = shapes::t_junction();
  const CarrierField c1 = build_carrier_2d(d, {1.0, 2.0, -3.0});
  const CarrierField c3 = build_carrier_2d(d, {-2.5, -5.0, 7.5});
  for (const Point& p : random_interior(c1, 4.0, 500, 3)) {
    const auto a = c1.eval(p), b = c3.eval(p);
    CHECK((b.a + 2.5 * a.a).norm() <= 1e-12 * std::max(1.0, a.a.norm()));
    CHECK((b.grad + 2.5 * a.grad).norm() <= 1e-11 * std::max(1.0, a.grad.norm()));
  }
}

TEST_CASE("carrier construction errors") {
  auto d = shapes::t_junction();
  try {
    build_carrier_2d(d, {1.0, 1.0, -1.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FluxImbalance);
  }
  try {
    build_carrier_2d(d, {1.0, -1.0, 0.0}, 0.6);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CutoffTooWide);
  }
}

TEST_CASE("angle form periods") {
  const Point c(0.3, -0.2);
  SUBCASE("unit circle, alpha = 2 pi") {
    const AngleForm w = angle_form(c, 2.0 * std::numbers::pi);
    const double I = loop_integral(
        w, [&](double u) { return Point(c + Point(std::cos(2 * std::numbers::pi * u), std::sin(2 * std::numbers::pi * u))); },
        [&](double u) {
          return Point(2 * std::numbers::pi * Point(-std::sin(2 * std::numbers::pi * u), std::cos(2 * std::numbers::pi * u)));
        });
    CHECK(I == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  }
  SUBCASE("square not enclosing the centre") {
    const AngleForm w = angle_form(c, 1.0);
    // four straight sides of [2, 3] x [1, 2], each integrated by Gauss-Legendre in the test
    const Point corners[5] = {{2, 1}, {3, 1}, {3, 2}, {2, 2}, {2, 1}};
    double I = 0.0;
    const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
    for (int s = 0; s < 4; ++s)
      for (int panel = 0; panel < 20; ++panel)
        for (int q = 0; q < 5; ++q) {
          const double u = (panel + 0.5 + 0.5 * gx[q]) / 20.0;
          const Point x = corners[s] + u * (corners[s + 1] - corners[s]);
          I += 0.5 * gw[q] / 20.0 * w(x).dot(corners[s + 1] - corners[s]);
        }
    CHECK(std::abs(I) < 1e-10);
  }
  SUBCASE("ellipse, alpha = 3") {
    const AngleForm w = angle_form(c, 3.0);
    const double A = 2.0, B = 0.5;
    auto integrand = [&](double th) {
      const Point x = c + Point(0.4 + A * std::cos(th), 0.1 + B * std::sin(th));
      return w(x).dot(Point(-A * std::sin(th), B * std::cos(th)));
    };
    // independent adaptive Simpson oracle
    std::function<double(double, double, double, double, double, double, int)> adapt =
        [&](double a, double b, double fa, double fm, double fb, double whole, int depth) -> double {
      const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = integrand(lm), frm = integrand(rm);
      const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
      if (depth > 40 || std::abs(left + right - whole) < 1e-13) return left + right + (left + right - whole) / 15;
      return adapt(a, m, fa, flm, fm, left, depth + 1) + adapt(m, b, fm, frm, fb, right, depth + 1);
    };
    const double a = 0, b = 2 * std::numbers::pi, fa = integrand(a), fb = integrand(b), fm = integrand(0.5 * (a + b));
    const double oracle = adapt(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), 0);
    CHECK(oracle == doctest::Approx(3.0).epsilon(1e-8));
    const double I = loop_integral(
        w, [&](double u) { return Point(c + Point(0.4 + A * std::cos(2 * std::numbers::pi * u), 0.1 + B * std::sin(2 * std::numbers::pi * u))); },
        [&](double u) {
          return Point(2 * std::numbers::pi * Point(-A * std::sin(2 * std::numbers::pi * u), B * std::cos(2 * std::numbers::pi * u)));
        });
    CHECK(std::abs(I - 3.0) < 1e-8);
  }
  SUBCASE("singular point") {
    try {
      angle_form(c, 1.0)(c);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularPoint);
    }
  }
}

TEST_CASE("spherical carrier, two poles") {
  const SphericalCarrier3D s = build_spherical_carrier({{0, 0, 1}, {0, 0, -1}}, {1.0, -1.0});
  for (double lat : {0.3, 0.9, 1.5, 2.2, 2.9}) {
    // latitude circle at polar angle lat, counter-clockwise seen from above
    SphericalCarrier3D::Loop loop;
    loop.gamma = [&](double u) {
      const double phi = 2 * std::numbers::pi * u;
      return Vec3(std::sin(lat) * std::cos(phi), std::sin(lat) * std::sin(phi), std::cos(lat));
    };
    loop.dgamma = [&](double u) {
      const double phi = 2 * std::numbers::pi * u;
      return Vec3(2 * std::numbers::pi * std::sin(lat) * Vec3(-std::sin(phi), std::cos(phi), 0));
    };
    CHECK(std::abs(s.loop_integral(loop) - 1.0) < 1e-8);
  }
}

TEST_CASE("spherical carrier, three punctures") {
  const std::vector<Vec3> p{{1, 0, 0}, {0, 1, 0}, Vec3(0, -1, 1).normalized()};
  const SphericalCarrier3D s = build_spherical_carrier(p, {1.0, 1.0, -2.0}, 0.1);
  for (int i = 0; i < 3; ++i) {
    const double expected = s.fluxes()[i];
    const double a = s.loop_integral(s.puncture_loop(i, 0.3));
    const double b = s.loop_integral(s.puncture_loop(i, 0.2, 0.4));
    CHECK(std::abs(a - expected) < 1e-8);
    CHECK(std::abs(a - b) < 1e-8);
    CHECK(std::abs(s.cap_flux(i, 0.35) - expected) < 1e-6);
  }
  SUBCASE("a is the curl of zeta b") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const double h = 1e-4;
    int tested = 0;
    while (tested < 200) {
      Vec3 x(g(rng), g(rng), g(rng));
      x = x.normalized() * (0.8 + 0.1 * std::uniform_real_distribution<double>()(rng));
      bool near_puncture = false;
      for (const Vec3& q : p) near_puncture |= (x.normalized() - q).norm() < 0.2;
      if (near_puncture) continue;
      ++tested;
      auto zb = [&](const Vec3& y) { return Vec3(s.zeta(y.norm()) * s.b(y)); };
      Eigen::Matrix3d J;
      for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = h;
        J.col(j) = (8.0 * (zb(x + e) - zb(x - e)) - (zb(x + 2 * e) - zb(x - 2 * e))) / (12 * h);
      }
      const Vec3 curl(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
      CHECK((curl - s.a(x)).norm() < 1e-6 * std::max(1.0, curl.norm()));
      Eigen::Matrix3d Ja;
      for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = h;
        Ja.col(j) = (8.0 * (s.a(x + e) - s.a(x - e)) - (s.a(x + 2 * e) - s.a(x - 2 * e))) / (12 * h);
      }
      CHECK(std::abs(Ja.trace()) < 1e-6 * std::max(1.0, Ja.norm()));
    }
  }
}

TEST_CASE("spherical carrier degenerate cases") {
  const SphericalCarrier3D z = build_spherical_carrier({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0, 0, 0});
  CHECK(z.btilde(Vec3(0.3, -0.5, 0.2)).norm() == 0.0);
  CHECK(z.a(Vec3(0.1, 0.8, -0.1)).norm() == 0.0);
  try {
    build_spherical_carrier({{1, 0, 0}, {1, 0, 0}, {0, 0, 1}}, {1, 1, -2});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePunctures);
  }
}
