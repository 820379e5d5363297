#pragma once

#include "anidmp/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <vector>

namespace anidmp {

/// Quadrature on a triangle in barycentric form. Weights sum to one; the
/// integral over K is |K| * sum_k w_k v(b_k).
struct QuadratureRule {
  std::vector<double> weights;
  std::vector<std::array<double, 3>> nodes;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

/// 3-point rule with nodes (1/6,1/6,2/3) and permutations; exact for degree 2.
QuadratureRule default_quadrature_2d();

/// 7-point rule exact for polynomials of degree 5; used for error norms.
QuadratureRule error_quadrature_2d();

/// -div(D grad u) = f in the domain, u = g on the boundary.
struct ProblemData {
  std::function<SymMat2(const Point2&)> diffusion;
  std::function<double(const Point2&)> source;
  std::function<double(const Point2&)> dirichlet;
  /// Optional closed-form solution and gradient.
  std::function<double(const Point2&)> exact;
  std::function<Vec2(const Point2&)> exact_gradient;

  [[nodiscard]] bool has_exact() const { return static_cast<bool>(exact) && static_cast<bool>(exact_gradient); }
};

/// D_K = sum_k w_k D(b_k^K). Throws NotSPD naming the offending node.
SymMat2 element_diffusion(const ProblemData& problem, const ElementGeometry& tri,
                          const QuadratureRule& rule);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Linear system in block form [A11 A12; 0 I] with interior unknowns first.
struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  int interior_count = 0;
  std::vector<int> dof_of_vertex;
  std::vector<int> vertex_of_dof;

  [[nodiscard]] int size() const { return static_cast<int>(rhs.size()); }
};

/// Full stiffness matrix indexed by vertex id, before any boundary treatment.
/// Every row sums to zero up to rounding. Optionally returns D_K per triangle.
SparseMatrix assemble_stiffness(const Mesh& mesh, const ProblemData& problem,
                                const QuadratureRule& rule,
                                std::vector<SymMat2>* element_diffusions = nullptr);

/// Stiffness plus load with Dirichlet rows replaced by identity rows.
/// Boundary vertices are those on edges carried by a single triangle.
SparseSystem assemble(const Mesh& mesh, const ProblemData& problem, const QuadratureRule& rule);

/// Solves the system and returns vertex values (indexed by vertex id).
/// Throws SolverBreakdown when the interior block is not SPD or the relative
/// residual exceeds 1e-10.
std::vector<double> solve(const SparseSystem& system);

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;  ///< H1 seminorm
};

/// L2 norm and H1 seminorm of u_h - u with the 7-point rule per element.
/// Throws MissingExact when either function is empty.
ErrorNorms error_norms(const Mesh& mesh, const std::vector<double>& u,
                       const std::function<double(const Point2&)>& exact,
                       const std::function<Vec2(const Point2&)>& exact_gradient);

/// Ids of vertices lying on an edge carried by a single triangle, ascending.
std::vector<int> boundary_vertices(const Mesh& mesh);

}  // namespace anidmp
