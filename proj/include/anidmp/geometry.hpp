#pragma once

#include "anidmp/sym_mat2.hpp"

#include <array>

namespace anidmp {

/// Per-triangle geometry. `q[i]` is the gradient of the linear basis function
/// of vertex i, i.e. the inward normal of the opposite side scaled so that
/// q[i] . (a_j - a_1) = delta_ij for i, j in {2, 3}.
struct ElementGeometry {
  std::array<Point2, 3> vertices;
  Mat2 edge_matrix;  ///< columns a_2 - a_1, a_3 - a_1
  std::array<Vec2, 3> q;
  double area = 0.0;
  /// Jacobian of the affine map from the right reference triangle
  /// (0,0),(1,0),(0,1); equal to the edge matrix.
  Mat2 jacobian;

  [[nodiscard]] Point2 centroid() const {
    return (vertices[0] + vertices[1] + vertices[2]) / 3.0;
  }
  [[nodiscard]] double max_edge_length() const;
  /// Maps barycentric coordinates to a physical point.
  [[nodiscard]] Point2 map(const std::array<double, 3>& bary) const {
    return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
  }
};

/// Throws DegenerateElement when |det E_K| <= 1e-14 * (max edge length)^2.
ElementGeometry element_geometry(const Point2& v1, const Point2& v2, const Point2& v3);

/// Cosine of the dihedral angle between the faces with normals qi and qj,
/// measured in the metric M. Throws ZeroVector for (near) zero inputs.
double metric_dihedral_cos(const Vec2& qi, const Vec2& qj, const SymMat2& m);

/// Vertices of the equilateral reference triangle of unit area.
std::array<Point2, 3> equilateral_reference();

/// Jacobian of the affine map from the equilateral unit-area reference
/// triangle onto `tri` (vertex i of the reference goes to vertex i of `tri`).
Mat2 reference_jacobian_equilateral(const ElementGeometry& tri);

/// Signed area of (a, b, c); positive for counterclockwise order.
inline double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace anidmp
