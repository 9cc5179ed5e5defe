#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bloom {

/// Linear triangle mesh with per-element P1 geometry. Triangles are stored
/// counter-clockwise; every node belongs to some triangle and the mesh is
/// connected.
struct TriMesh {
  Eigen::Matrix2Xd nodes;                      ///< coordinates (m), one column per node
  std::vector<std::array<int, 3>> triangles;
  Eigen::VectorXd areas;
  /// grad phi_k on element e is (grad_x(k, e), grad_y(k, e)).
  Eigen::Matrix3Xd grad_x, grad_y;
  std::vector<std::array<int, 2>> boundary_edges;

  int node_count() const { return static_cast<int>(nodes.cols()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  double total_area() const { return areas.sum(); }
  double boundary_length() const;
  /// Longest element edge.
  double max_edge() const;
};

/// Builds and validates a mesh. Zero-area or clockwise triangles, indices out
/// of range and disconnected meshes are errors (DomainError); nodes that no
/// triangle uses are dropped.
TriMesh make_mesh(const Eigen::Matrix2Xd& nodes, const std::vector<std::array<int, 3>>& triangles);

/// ASCII gmsh reader for format versions 2.2 and 4.1. Only 3-node triangles
/// are kept; other element types are counted and reported through warn().
TriMesh load_gmsh_mesh(const std::string& path);

/// Element containing x and its barycentric coordinates; element -1 when x is
/// outside the mesh (beyond `tol` in barycentric terms).
struct PointLocation {
  int element = -1;
  Eigen::Vector3d weights = Eigen::Vector3d::Zero();
};

PointLocation locate(const TriMesh& mesh, const Eigen::Vector2d& x, double tol = 1e-9);

/// P1 interpolation of nodal values of `from` at the nodes of `to`. Throws if
/// any target node lies outside `from`.
Eigen::VectorXd interpolate(const TriMesh& from, const Eigen::VectorXd& values, const TriMesh& to);

}  // namespace bloom
