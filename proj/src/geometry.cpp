#include "anidmp/geometry.hpp"

#include "anidmp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace anidmp {

double ElementGeometry::max_edge_length() const {
  return std::max({(vertices[1] - vertices[0]).norm(), (vertices[2] - vertices[1]).norm(),
                   (vertices[0] - vertices[2]).norm()});
}

ElementGeometry element_geometry(const Point2& v1, const Point2& v2, const Point2& v3) {
  ElementGeometry g;
  g.vertices = {v1, v2, v3};
  g.edge_matrix.col(0) = v2 - v1;
  g.edge_matrix.col(1) = v3 - v1;

  const double det = g.edge_matrix.determinant();
  const double h = g.max_edge_length();
  if (!(std::abs(det) > 1e-14 * h * h)) {
    throw DegenerateElement("degenerate triangle (" + std::to_string(v1.x()) + "," +
                            std::to_string(v1.y()) + ") ... det=" + std::to_string(det));
  }

  // [q2 q3] = E^{-T}
  const Mat2 inv_t = g.edge_matrix.inverse().transpose();
  g.q[1] = inv_t.col(0);
  g.q[2] = inv_t.col(1);
  g.q[0] = -(g.q[1] + g.q[2]);
  g.area = 0.5 * std::abs(det);
  g.jacobian = g.edge_matrix;
  return g;
}

double metric_dihedral_cos(const Vec2& qi, const Vec2& qj, const SymMat2& m) {
  if (qi.norm() <= 1e-300 || qj.norm() <= 1e-300) {
    throw ZeroVector("metric_dihedral_cos: zero q-vector");
  }
  const double c = -m.bilinear(qi, qj) / std::sqrt(m.quadratic(qi) * m.quadratic(qj));
  return std::clamp(c, -1.0, 1.0);
}

std::array<Point2, 3> equilateral_reference() {
  // sqrt(3)/4 s^2 = 1
  const double s = 2.0 / std::pow(3.0, 0.25);
  return {Point2{0.0, 0.0}, Point2{s, 0.0}, Point2{0.5 * s, 0.5 * std::sqrt(3.0) * s}};
}

Mat2 reference_jacobian_equilateral(const ElementGeometry& tri) {
  static const Mat2 ref_edges_inv = [] {
    const auto r = equilateral_reference();
    Mat2 e;
    e.col(0) = r[1] - r[0];
    e.col(1) = r[2] - r[0];
    return Mat2(e.inverse());
  }();
  return tri.edge_matrix * ref_edges_inv;
}

}  // namespace anidmp
