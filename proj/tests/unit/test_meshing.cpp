#include <doctest.h>

#include "pflux/error.hpp"
#include "pflux/meshing.hpp"

#include <sstream>

using namespace pflux;

namespace {

double shoelace(const std::vector<Point>& p) {
  double a = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Point& u = p[j];
    const Point& v = p[(j + 1) % p.size()];
    a += u.x() * v.y() - v.x() * u.y();
  }
  return 0.5 * a;
}

void check_quality(const Mesh& m, int k) {
  const MeshQuality q = mesh_quality(m);
  CHECK(q.conforming);
  CHECK(q.boundary_tagged);
  CHECK(q.min_signed_area > 0.0);
  CHECK(q.min_angle_deg >= 20.0);
  CHECK(q.max_edge <= 2.0 * m.h);
  CHECK(q.min_edge >= 0.25 * m.h);
  CHECK(q.cut_groups == k);
}

}  // namespace

TEST_CASE("unit square") {
  auto parent = shapes::strip();
  CutDomain sq;
  sq.t = 1.0;
  sq.parent = parent;
  sq.boundary = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  sq.tags.assign(4, BoundaryTag{});
  const Mesh m = mesh_cut_domain(sq, 0.25);
  check_quality(m, 0);
  CHECK(m.area() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("strip mesh area and refinement count") {
  auto d = shapes::strip();
  const CutDomain cd = cut_domain(d, 5.0);
  const Mesh m = mesh_cut_domain(cd, 0.25);
  check_quality(m, 2);
  CHECK(std::abs(m.area() - shoelace(cd.boundary)) < 1e-10);
  const Mesh f = mesh_cut_domain(cd, 0.125);
  check_quality(f, 2);
  const double ratio = static_cast<double>(f.num_vertices()) / m.num_vertices();
  MESSAGE("vertex ratio " << ratio);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("curved and branched domains mesh cleanly") {
  for (auto d : {shapes::t_junction(), shapes::s_channel(), shapes::wavy_strip()}) {
    const CutDomain cd = cut_domain(d, 4.0);
    const Mesh m = mesh_cut_domain(cd, 0.2);
    check_quality(m, d->k());
    CHECK(std::abs(m.area() - shoelace(cd.boundary)) < 1e-10);
  }
}

TEST_CASE("sections are mesh lines") {
  auto d = shapes::s_channel();
  const Mesh m = mesh_cut_domain(cut_domain(d, 5.0), 0.25);
  for (int i = 0; i < 2; ++i)
    for (double s : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
      const auto& sec = m.section(i, s);
      REQUIRE(!sec.empty());
      const CrossSection cs = cross_section(*d, i, s);
      double len = 0.0;
      for (const Edge& e : sec) {
        len += (m.vertices[e[1]] - m.vertices[e[0]]).norm();
        CHECK(std::abs((m.vertices[e[0]] - cs.right).dot(cs.normal)) < 1e-10);
      }
      CHECK(len == doctest::Approx(cs.length()).epsilon(1e-12));
      CHECK((m.vertices[sec.front()[0]] - cs.right).norm() < 1e-12);
      CHECK((m.vertices[sec.back()[1]] - cs.left).norm() < 1e-12);
    }
  CHECK_THROWS_AS(m.section(0, 2.5), Error);
}

TEST_CASE("submesh") {
  auto d = shapes::strip();
  const Mesh m = mesh_cut_domain(cut_domain(d, 5.0), 0.25);
  SUBCASE("full domain") {
    const Mesh s = submesh(m, 5.0);
    CHECK(s.num_triangles() == m.num_triangles());
    CHECK(s.num_vertices() == m.num_vertices());
  }
  SUBCASE("inner domain area and additivity") {
    const Mesh s = submesh(m, 2.0);
    const double inner = shoelace(cut_domain(d, 2.0).boundary);
    CHECK(std::abs(s.area() - inner) < 1e-10);
    double outer = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
      const MeshRegion& r = m.regions[m.triangle_region[t]];
      if (r.outlet >= 0 && r.s_lo >= 2.0 - 1e-12) outer += m.triangle_area(t);
    }
    CHECK(std::abs(s.area() + outer - m.area()) < 1e-10);
    check_quality(s, 2);
    for (int v = 0; v < s.num_vertices(); ++v) CHECK((s.vertices[v] - m.vertices[s.global_vertex[v]]).norm() == 0.0);
  }
  SUBCASE("misaligned or too small") {
    CHECK_THROWS_AS(submesh(m, 2.5), Error);
    try {
      submesh(m, 0.5);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::DomainTooSmall || e.code() == ErrorCode::SectionNotAligned));
    }
  }
}

TEST_CASE("mesh size contract") {
  auto d = shapes::wavy_strip(0.2, 2.0);
  try {
    mesh_cut_domain(cut_domain(d, 3.0), 0.45);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshTooCoarse);
  }
}

TEST_CASE("self-intersecting boundary") {
  CutDomain bow;
  bow.t = 1.0;
  bow.parent = shapes::strip();
  bow.boundary = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  bow.tags.assign(4, BoundaryTag{});
  try {
    mesh_cut_domain(bow, 0.25);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidGeometry);
  }
}

TEST_CASE("exports") {
  const Mesh m = mesh_cut_domain(cut_domain(shapes::strip(), 1.0), 0.5);
  std::ostringstream vtk, txt;
  write_vtk(m, vtk);
  write_node_ele(m, txt);
  CHECK(vtk.str().find("UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(txt.str().rfind("vertices " + std::to_string(m.num_vertices()), 0) == 0);
}
