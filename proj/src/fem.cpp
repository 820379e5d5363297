#include "anidmp/fem.hpp"

#include "anidmp/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <string>

namespace anidmp {

QuadratureRule default_quadrature_2d() {
  constexpr double a = 1.0 / 6.0;
  constexpr double b = 2.0 / 3.0;
  return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {{a, a, b}, {a, b, a}, {b, a, a}}};
}

QuadratureRule error_quadrature_2d() {
  const double r15 = std::sqrt(15.0);
  const double b1 = (6.0 + r15) / 21.0;
  const double a1 = 1.0 - 2.0 * b1;
  const double b2 = (6.0 - r15) / 21.0;
  const double a2 = 1.0 - 2.0 * b2;
  const double w1 = (155.0 + r15) / 1200.0;
  const double w2 = (155.0 - r15) / 1200.0;
  return {{9.0 / 40.0, w1, w1, w1, w2, w2, w2},
          {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
           {a1, b1, b1},
           {b1, a1, b1},
           {b1, b1, a1},
           {a2, b2, b2},
           {b2, a2, b2},
           {b2, b2, a2}}};
}

SymMat2 element_diffusion(const ProblemData& problem, const ElementGeometry& tri,
                          const QuadratureRule& rule) {
  SymMat2 d_k{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const Point2 b = tri.map(rule.nodes[k]);
    const SymMat2 d = problem.diffusion(b);
    if (!d.is_spd()) {
      throw NotSPD("diffusion not SPD at (" + std::to_string(b.x()) + ", " + std::to_string(b.y()) +
                   ")");
    }
    d_k += rule.weights[k] * d;
  }
  return d_k;
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const ProblemData& problem,
                                const QuadratureRule& rule,
                                std::vector<SymMat2>* element_diffusions) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  if (element_diffusions) element_diffusions->assign(mesh.triangles.size(), SymMat2{});

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const ElementGeometry g = mesh.element(t);
    const SymMat2 d_k = element_diffusion(problem, g, rule);
    if (element_diffusions) (*element_diffusions)[static_cast<std::size_t>(t)] = d_k;
    for (int i = 0; i < 3; ++i) {
      triplets.emplace_back(tri.v[i], tri.v[i], g.area * d_k.quadratic(g.q[i]));
      for (int j = i + 1; j < 3; ++j) {
        // one value for both (i,j) and (j,i) keeps A exactly symmetric
        const double a = g.area * d_k.bilinear(g.q[i], g.q[j]);
        triplets.emplace_back(tri.v[i], tri.v[j], a);
        triplets.emplace_back(tri.v[j], tri.v[i], a);
      }
    }
  }
  SparseMatrix a(mesh.num_vertices(), mesh.num_vertices());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

std::vector<int> boundary_vertices(const Mesh& mesh) {
  const Connectivity conn = build_connectivity(mesh);
  std::vector<int> out;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (conn.on_boundary[static_cast<std::size_t>(v)]) out.push_back(v);
  }
  return out;
}

SparseSystem assemble(const Mesh& mesh, const ProblemData& problem, const QuadratureRule& rule) {
  const int nv = mesh.num_vertices();
  const Connectivity conn = build_connectivity(mesh);

  SparseSystem sys;
  sys.dof_of_vertex.assign(static_cast<std::size_t>(nv), -1);
  for (int v = 0; v < nv; ++v) {
    if (!conn.on_boundary[static_cast<std::size_t>(v)]) {
      sys.dof_of_vertex[static_cast<std::size_t>(v)] = static_cast<int>(sys.vertex_of_dof.size());
      sys.vertex_of_dof.push_back(v);
    }
  }
  sys.interior_count = static_cast<int>(sys.vertex_of_dof.size());
  for (int v = 0; v < nv; ++v) {
    if (conn.on_boundary[static_cast<std::size_t>(v)]) {
      sys.dof_of_vertex[static_cast<std::size_t>(v)] = static_cast<int>(sys.vertex_of_dof.size());
      sys.vertex_of_dof.push_back(v);
    }
  }

  const SparseMatrix full = assemble_stiffness(mesh, problem, rule);

  Eigen::VectorXd load = Eigen::VectorXd::Zero(nv);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const ElementGeometry g = mesh.element(t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double fk = problem.source(g.map(rule.nodes[k]));
      for (int i = 0; i < 3; ++i) {
        load[tri.v[i]] += g.area * rule.weights[k] * fk * rule.nodes[k][static_cast<std::size_t>(i)];
      }
    }
  }

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(full.nonZeros()));
  sys.rhs.resize(nv);
  for (int row = 0; row < nv; ++row) {
    const int v = sys.vertex_of_dof[static_cast<std::size_t>(row)];
    if (row < sys.interior_count) {
      for (SparseMatrix::InnerIterator it(full, v); it; ++it) {
        triplets.emplace_back(row, sys.dof_of_vertex[static_cast<std::size_t>(it.col())], it.value());
      }
      sys.rhs[row] = load[v];
    } else {
      triplets.emplace_back(row, row, 1.0);
      sys.rhs[row] = problem.dirichlet(mesh.points[static_cast<std::size_t>(v)]);
    }
  }
  sys.matrix.resize(nv, nv);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

std::vector<double> solve(const SparseSystem& system) {
  const int n = system.size();
  const int ni = system.interior_count;
  Eigen::VectorXd x(n);
  x.tail(n - ni) = system.rhs.tail(n - ni);

  if (ni > 0) {
    const Eigen::SparseMatrix<double> a11 = system.matrix.topLeftCorner(ni, ni);
    const Eigen::VectorXd b =
        system.rhs.head(ni) - system.matrix.topRightCorner(ni, n - ni) * x.tail(n - ni);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(a11);
    if (llt.info() != Eigen::Success) {
      throw SolverBreakdown("interior stiffness block is not SPD");
    }
    x.head(ni) = llt.solve(b);
    if (llt.info() != Eigen::Success || !x.allFinite()) {
      throw SolverBreakdown("Cholesky solve failed");
    }
  }

  const double rnorm = (system.matrix * x - system.rhs).norm();
  const double fnorm = system.rhs.norm();
  if (rnorm > 1e-10 * std::max(fnorm, 1e-300) && rnorm > 1e-300) {
    throw SolverBreakdown("relative residual " + std::to_string(rnorm / fnorm) + " above 1e-10");
  }

  std::vector<double> u(static_cast<std::size_t>(n));
  for (int dof = 0; dof < n; ++dof) {
    u[static_cast<std::size_t>(system.vertex_of_dof[static_cast<std::size_t>(dof)])] = x[dof];
  }
  return u;
}

ErrorNorms error_norms(const Mesh& mesh, const std::vector<double>& u,
                       const std::function<double(const Point2&)>& exact,
                       const std::function<Vec2(const Point2&)>& exact_gradient) {
  if (!exact || !exact_gradient) throw MissingExact("error_norms needs the exact solution and gradient");
  const QuadratureRule rule = error_quadrature_2d();
  double l2 = 0.0;
  double h1 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const ElementGeometry g = mesh.element(t);
    const std::array<double, 3> uv{u[static_cast<std::size_t>(tri.v[0])],
                                   u[static_cast<std::size_t>(tri.v[1])],
                                   u[static_cast<std::size_t>(tri.v[2])]};
    const Vec2 grad_h = uv[0] * g.q[0] + uv[1] * g.q[1] + uv[2] * g.q[2];
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& b = rule.nodes[k];
      const Point2 p = g.map(b);
      const double uh = b[0] * uv[0] + b[1] * uv[1] + b[2] * uv[2];
      const double e = uh - exact(p);
      l2 += g.area * rule.weights[k] * e * e;
      h1 += g.area * rule.weights[k] * (grad_h - exact_gradient(p)).squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

}  // namespace anidmp
