#pragma once

#include "pflux/geometry.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace pflux {

struct BoundaryEdge {
  std::array<int, 2> v;
  BoundaryTag tag;
};

/// Block of the mesh between two consecutive snapped sections of one outlet,
/// or the core (outlet == -1).
struct MeshRegion {
  int outlet = -1;
  double s_lo = 0.0;
  double s_hi = 0.0;
};

using Edge = std::array<int, 2>;

/// Conforming triangulation of a cut domain. Cross sections at the snap values
/// of every outlet are unions of mesh edges, so integrals over Omega_tau for a
/// snapped tau are exact sums over whole triangles.
struct Mesh {
  double h = 0.0;
  double t = 0.0;
  DomainPtr domain;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<int> triangle_region;
  std::vector<MeshRegion> regions;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::vector<double>> snaps;                   // [outlet][j]
  std::vector<std::vector<std::vector<Edge>>> section_edges;  // [outlet][j], oriented right -> left wall
  std::vector<int> global_vertex;                           // vertex id in the root mesh

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double area() const;
  double triangle_area(int tri) const;
  /// Snap index of section s of an outlet, or -1.
  int snap_index(int outlet, double s) const;
  /// Mesh edges forming the cross section (outlet, s); throws SectionNotAligned.
  const std::vector<Edge>& section(int outlet, double s) const;
};

struct MeshOptions {
  double min_angle_deg = 25.0;
  /// Triangles whose longest edge exceeds size_factor * h are refined.
  double size_factor = 1.0;
  int max_vertices = 4'000'000;
};

/// Constrained (conforming) Delaunay triangulation with Ruppert refinement.
Mesh mesh_cut_domain(const CutDomain& cd, double h, const MeshOptions& options = {});

/// Triangles of `mesh` inside Omega_tau; tau must be a snap value of every outlet.
Mesh submesh(const Mesh& mesh, double tau);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double min_signed_area = 0.0;
  double min_edge = 0.0;
  double max_edge = 0.0;
  bool conforming = false;     // interior edges shared by 2 triangles, boundary edges by 1
  bool boundary_tagged = false;  // every boundary edge carries exactly one tag
  int cut_groups = 0;          // number of distinct outlets with CUT edges
};

MeshQuality mesh_quality(const Mesh& mesh);

void write_vtk(const Mesh& mesh, std::ostream& out);
/// Plain text: "vertices N" + "i x y" lines, "triangles M" + "i a b c region",
/// "boundary_edges B" + "i a b kind outlet".
void write_node_ele(const Mesh& mesh, std::ostream& out);

}  // namespace pflux
