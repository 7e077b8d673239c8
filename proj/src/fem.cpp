#include "pflux/fem.hpp"

#include "pflux/error.hpp"
#include "pflux/quadrature.hpp"

namespace pflux {

namespace {

int tag_class(const BoundaryTag& tag) { return tag.kind == BoundaryKind::Wall ? 0 : 1 + tag.outlet; }

constexpr int kLocalEdge[3][2] = {{0, 1}, {1, 2}, {2, 0}};

}  // namespace

std::uint64_t P2Space::key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

P2Space::P2Space(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)), nv_(mesh_->num_vertices()) {
  const int nt = mesh_->num_triangles();
  element_dofs_.resize(nt);
  edge_index_.reserve(static_cast<std::size_t>(3 * nt));
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_->triangles[t];
    auto& dofs = element_dofs_[t];
    for (int i = 0; i < 3; ++i) dofs[i] = tri[i];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[kLocalEdge[e][0]], b = tri[kLocalEdge[e][1]];
      auto [it, inserted] = edge_index_.try_emplace(key(a, b), static_cast<int>(edges_.size()));
      if (inserted) edges_.push_back({std::min(a, b), std::max(a, b)});
      dofs[3 + e] = nv_ + it->second;
    }
  }
  boundary_.assign(num_dofs(), -1);
  for (const BoundaryEdge& be : mesh_->boundary_edges) {
    const int d = edge_dof(be.v[0], be.v[1]);
    if (d < 0) throw Error(ErrorCode::InvalidGeometry, "boundary edge is not a triangle edge");
    const int c = tag_class(be.tag);
    boundary_[d] = c;
    for (int v : be.v)
      if (boundary_[v] != 0) boundary_[v] = c;  // corners shared with a wall stay wall dofs
  }
}

int P2Space::edge_dof(int a, int b) const {
  const auto it = edge_index_.find(key(a, b));
  return it == edge_index_.end() ? -1 : nv_ + it->second;
}

Point P2Space::dof_point(int dof) const {
  if (dof < nv_) return mesh_->vertices[dof];
  const Edge& e = edges_[dof - nv_];
  return 0.5 * (mesh_->vertices[e[0]] + mesh_->vertices[e[1]]);
}

std::pair<int, int> P2Space::global_key(int dof) const {
  const auto& gv = mesh_->global_vertex;
  auto g = [&](int v) { return gv.empty() ? v : gv[v]; };
  if (dof < nv_) return {g(dof), g(dof)};
  const Edge& e = edges_[dof - nv_];
  const int a = g(e[0]), b = g(e[1]);
  return {std::min(a, b), std::max(a, b)};
}

ElementGeometry element_geometry(const Mesh& mesh, int tri) {
  ElementGeometry g;
  const auto& t = mesh.triangles[tri];
  for (int i = 0; i < 3; ++i) g.x[i] = mesh.vertices[t[i]];
  const Point e1 = g.x[1] - g.x[0], e2 = g.x[2] - g.x[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  g.area = 0.5 * det;
  // grad lambda_i is the inward normal of the opposite edge over twice the area
  for (int i = 0; i < 3; ++i) {
    const Point& a = g.x[(i + 1) % 3];
    const Point& b = g.x[(i + 2) % 3];
    g.grad_lambda.row(i) = Eigen::RowVector2d(a.y() - b.y(), b.x() - a.x()) / det;
  }
  return g;
}

Eigen::Matrix<double, 6, 1> p2_values(const Eigen::Vector3d& l) {
  Eigen::Matrix<double, 6, 1> N;
  for (int i = 0; i < 3; ++i) N[i] = l[i] * (2.0 * l[i] - 1.0);
  N[3] = 4.0 * l[0] * l[1];
  N[4] = 4.0 * l[1] * l[2];
  N[5] = 4.0 * l[2] * l[0];
  return N;
}

Eigen::Matrix<double, 6, 3> p2_lambda_derivatives(const Eigen::Vector3d& l) {
  Eigen::Matrix<double, 6, 3> d = Eigen::Matrix<double, 6, 3>::Zero();
  for (int i = 0; i < 3; ++i) d(i, i) = 4.0 * l[i] - 1.0;
  d(3, 0) = 4.0 * l[1];
  d(3, 1) = 4.0 * l[0];
  d(4, 1) = 4.0 * l[2];
  d(4, 2) = 4.0 * l[1];
  d(5, 2) = 4.0 * l[0];
  d(5, 0) = 4.0 * l[2];
  return d;
}

P2Tabulation::P2Tabulation(int degree) {
  const auto& rule = quad::triangle_rule(degree);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Eigen::Vector3d l(rule.points[q][0], rule.points[q][1], rule.points[q][2]);
    lambda_.push_back(l);
    weights_.push_back(rule.weights[q]);
    values_.push_back(p2_values(l));
    dlambda_.push_back(p2_lambda_derivatives(l));
  }
}

VelocitySample sample_velocity(const P2Space& space, const Eigen::VectorXd& coeffs, int tri, const P2Tabulation& tab,
                               int q, const ElementGeometry& g) {
  const int n = space.num_dofs();
  const auto& dofs = space.element_dofs(tri);
  const auto& N = tab.values(q);
  const Eigen::Matrix<double, 6, 2> dN = tab.gradients(q, g);
  Eigen::Matrix<double, 6, 2> c;
  for (int k = 0; k < 6; ++k) {
    c(k, 0) = coeffs[dofs[k]];
    c(k, 1) = coeffs[n + dofs[k]];
  }
  VelocitySample s;
  s.v = c.transpose() * N;
  s.grad = c.transpose() * dN;
  return s;
}

}  // namespace pflux
