#pragma once

#include "pflux/meshing.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

namespace pflux {

/// Continuous piecewise-quadratic scalar space on a mesh. Dofs are the vertices
/// followed by the edge midpoints; local order is v0, v1, v2, m01, m12, m20.
class P2Space {
 public:
  explicit P2Space(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int num_vertices() const { return nv_; }
  int num_dofs() const { return nv_ + static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::array<int, 6>& element_dofs(int tri) const { return element_dofs_[tri]; }
  /// -1 for interior dofs, otherwise the tag index: 0 wall, 1 + i for the cut face of outlet i.
  int boundary_class(int dof) const { return boundary_[dof]; }
  bool on_boundary(int dof) const { return boundary_[dof] >= 0; }
  /// Dof of the edge (a, b); -1 if it is not a mesh edge.
  int edge_dof(int a, int b) const;
  Point dof_point(int dof) const;
  /// Vertex pair in the root mesh identifying the dof across nested meshes.
  std::pair<int, int> global_key(int dof) const;

 private:
  static std::uint64_t key(int a, int b);

  std::shared_ptr<const Mesh> mesh_;
  int nv_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 6>> element_dofs_;
  std::vector<int> boundary_;
  std::unordered_map<std::uint64_t, int> edge_index_;
};

/// Affine data of one triangle: gradients of the barycentric coordinates (rows) and area.
struct ElementGeometry {
  Eigen::Matrix<double, 3, 2> grad_lambda;
  double area = 0.0;
  std::array<Point, 3> x;
  Point map(const Eigen::Vector3d& lambda) const { return lambda[0] * x[0] + lambda[1] * x[1] + lambda[2] * x[2]; }
};

ElementGeometry element_geometry(const Mesh& mesh, int tri);

/// P2 shape functions on barycentric coordinates.
Eigen::Matrix<double, 6, 1> p2_values(const Eigen::Vector3d& lambda);
/// d N_k / d lambda_i.
Eigen::Matrix<double, 6, 3> p2_lambda_derivatives(const Eigen::Vector3d& lambda);

/// Shape function values and physical gradients at the points of a triangle rule,
/// with the reference part precomputed once.
class P2Tabulation {
 public:
  explicit P2Tabulation(int degree = 5);
  int size() const { return static_cast<int>(weights_.size()); }
  const Eigen::Vector3d& lambda(int q) const { return lambda_[q]; }
  double weight(int q) const { return weights_[q]; }  // sums to 1
  const Eigen::Matrix<double, 6, 1>& values(int q) const { return values_[q]; }
  Eigen::Matrix<double, 6, 2> gradients(int q, const ElementGeometry& g) const { return dlambda_[q] * g.grad_lambda; }

 private:
  std::vector<Eigen::Vector3d> lambda_;
  std::vector<double> weights_;
  std::vector<Eigen::Matrix<double, 6, 1>> values_;
  std::vector<Eigen::Matrix<double, 6, 3>> dlambda_;
};

/// Velocity value and gradient (grad(i, j) = d v_i / d x_j) of a P2 vector field
/// stored as [vx | vy] at a tabulation point.
struct VelocitySample {
  Eigen::Vector2d v;
  Eigen::Matrix2d grad;
};

VelocitySample sample_velocity(const P2Space& space, const Eigen::VectorXd& coeffs, int tri, const P2Tabulation& tab,
                               int q, const ElementGeometry& g);

inline Eigen::Matrix2d sym(const Eigen::Matrix2d& G) { return 0.5 * (G + G.transpose()); }

}  // namespace pflux
