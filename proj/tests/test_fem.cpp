#include "anidmp/errors.hpp"
#include "anidmp/fem.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace anidmp;

namespace {

ProblemData laplace(std::function<double(const Point2&)> g) {
  ProblemData p;
  p.diffusion = [](const Point2&) { return SymMat2::identity(); };
  p.source = [](const Point2&) { return 0.0; };
  p.dirichlet = std::move(g);
  return p;
}

double integrate_reference(const QuadratureRule& rule, const std::function<double(double, double)>& f) {
  // right reference triangle: barycentric (b0, b1, b2) maps to (b1, b2)
  double s = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) s += rule.weights[k] * f(rule.nodes[k][1], rule.nodes[k][2]);
  return 0.5 * s;
}

}  // namespace

TEST(Quadrature, ReferenceIntegrals) {
  const auto rule = default_quadrature_2d();
  ASSERT_EQ(rule.size(), 3u);
  EXPECT_NEAR(integrate_reference(rule, [](double, double) { return 1.0; }), 0.5, 1e-15);
  EXPECT_NEAR(integrate_reference(rule, [](double x, double) { return x; }), 1.0 / 6, 1e-15);
  EXPECT_NEAR(integrate_reference(rule, [](double x, double) { return x * x; }), 1.0 / 12, 1e-15);
}

TEST(Quadrature, DegreeTwoExactOnRandomQuadratics) {
  // exact monomial integrals over the right reference triangle
  const double m00 = 0.5, m10 = 1.0 / 6, m01 = 1.0 / 6, m20 = 1.0 / 12, m02 = 1.0 / 12, m11 = 1.0 / 24;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> c(-3.0, 3.0);
  for (const auto& rule : {default_quadrature_2d(), error_quadrature_2d()}) {
    for (int k = 0; k < 50; ++k) {
      const double c0 = c(rng), c1 = c(rng), c2 = c(rng), c3 = c(rng), c4 = c(rng), c5 = c(rng);
      const double exact = c0 * m00 + c1 * m10 + c2 * m01 + c3 * m20 + c4 * m11 + c5 * m02;
      const double q = integrate_reference(
          rule, [&](double x, double y) { return c0 + c1 * x + c2 * y + c3 * x * x + c4 * x * y + c5 * y * y; });
      const double scale = std::abs(c0) + std::abs(c1) + std::abs(c2) + std::abs(c3) + std::abs(c4) + std::abs(c5);
      EXPECT_NEAR(q, exact, 1e-14 * scale);
    }
  }
}

TEST(Quadrature, SevenPointDegreeFive) {
  const auto rule = error_quadrature_2d();
  // integral of x^a y^b over the reference triangle = a! b! / (a+b+2)!
  EXPECT_NEAR(integrate_reference(rule, [](double x, double y) { return x * x * x * y * y; }), 6.0 * 2.0 / 5040.0,
              1e-15);
  EXPECT_NEAR(integrate_reference(rule, [](double x, double) { return std::pow(x, 5); }), 120.0 / 5040.0, 1e-15);
}

TEST(ElementDiffusion, Examples) {
  const auto rule = default_quadrature_2d();
  const auto ref = element_geometry({0, 0}, {1, 0}, {0, 1});
  ProblemData p = laplace([](const Point2&) { return 0.0; });
  EXPECT_EQ(element_diffusion(p, ref, rule), SymMat2::identity());

  p.diffusion = [](const Point2&) { return SymMat2{500.5, 499.5, 500.5}; };
  const auto d2 = element_diffusion(p, element_geometry({3, 1}, {7, 2}, {4, 6}), rule);
  EXPECT_NEAR(d2.a11, 500.5, 1e-12);
  EXPECT_NEAR(d2.a12, 499.5, 1e-12);
  EXPECT_NEAR(d2.a22, 500.5, 1e-12);

  p.diffusion = [](const Point2& x) { return SymMat2::diag(1.0 + x.x(), 1.0); };
  const auto d3 = element_diffusion(p, ref, rule);
  EXPECT_NEAR(d3.a11, 4.0 / 3, 1e-15);
  EXPECT_NEAR(d3.a22, 1.0, 1e-15);

  p.diffusion = [](const Point2&) { return SymMat2::diag(1.0, -1.0); };
  EXPECT_THROW(element_diffusion(p, ref, rule), NotSPD);
}

TEST(Assemble, TwoTriangleLaplaceValues) {
  const Mesh m = fixtures::two_triangle_square();
  const SparseMatrix a = assemble_stiffness(m, laplace(nullptr), default_quadrature_2d());
  // vertices 0 and 2 are shared by both triangles
  EXPECT_NEAR(a.coeff(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(a.coeff(2, 2), 1.0, 1e-15);
  EXPECT_NEAR(a.coeff(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(a.coeff(0, 2), 0.0, 1e-15);
  EXPECT_NEAR(a.coeff(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(a.coeff(1, 3), 0.0, 1e-15);
}

TEST(Assemble, InteriorVertexStencil) {
  // the centre of a 2x2 grid gets the 5-point stencil scaled by one
  const Mesh m = builtin_domain("unit_square", 2);
  const SparseMatrix a = assemble_stiffness(m, laplace(nullptr), default_quadrature_2d());
  int centre = -1;
  for (int v = 0; v < m.num_vertices(); ++v)
    if ((m.points[v] - Point2(0.5, 0.5)).norm() < 1e-14) centre = v;
  ASSERT_GE(centre, 0);
  EXPECT_NEAR(a.coeff(centre, centre), 4.0, 1e-14);
  double offdiag = 0.0;
  for (SparseMatrix::InnerIterator it(a, centre); it; ++it)
    if (it.col() != centre) {
      EXPECT_LE(it.value(), 1e-14);
      offdiag += it.value();
    }
  EXPECT_NEAR(offdiag, -4.0, 1e-14);
}

TEST(Assemble, SymmetricAndZeroRowSums) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Mesh m = fixtures::jittered_square(6, 0.3, rng);
    const SymMat2 d0 = fixtures::random_spd(rng);
    ProblemData p = laplace(nullptr);
    p.diffusion = [d0](const Point2& x) { return d0 * (1.0 + x.x() * x.y()); };
    const SparseMatrix a = assemble_stiffness(m, p, default_quadrature_2d());
    const Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(a) - Eigen::SparseMatrix<double>(a.transpose());
    EXPECT_EQ(diff.norm(), 0.0);
    for (int r = 0; r < a.rows(); ++r) {
      double sum = 0.0, mx = 0.0;
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
        sum += it.value();
        mx = std::max(mx, std::abs(it.value()));
      }
      EXPECT_LE(std::abs(sum), 1e-10 * mx);
    }
  }
}

TEST(Assemble, IsotropicScalingCrossCheck) {
  // D = a(x) I equals the Laplace element matrices scaled by the quadrature mean of a
  const Mesh m = builtin_domain("unit_square", 5);
  const auto rule = default_quadrature_2d();
  const auto coef = [](const Point2& x) { return 1.0 + 3.0 * x.x() + x.y() * x.y(); };
  ProblemData p = laplace(nullptr);
  p.diffusion = [&](const Point2& x) { return SymMat2::scalar(coef(x)); };
  const SparseMatrix a = assemble_stiffness(m, p, rule);

  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto g = m.element(t);
    double mean = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) mean += rule.weights[k] * coef(g.map(rule.nodes[k]));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ref(m.triangles[t].v[i], m.triangles[t].v[j]) += mean * g.area * g.q[i].dot(g.q[j]);
  }
  EXPECT_LE((Eigen::MatrixXd(a) - ref).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assemble, BlockStructure) {
  const Mesh m = builtin_domain("unit_square", 4);
  const SparseSystem s = assemble(m, laplace([](const Point2& x) { return x.x(); }), default_quadrature_2d());
  EXPECT_EQ(s.size(), m.num_vertices());
  EXPECT_EQ(s.interior_count, 9);
  for (int r = s.interior_count; r < s.size(); ++r) {
    EXPECT_EQ(s.matrix.coeff(r, r), 1.0);
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(s.matrix, r); it; ++it)
      if (it.col() != r) off += std::abs(it.value());
    EXPECT_EQ(off, 0.0);
    EXPECT_EQ(s.rhs[r], m.points[s.vertex_of_dof[r]].x());
  }
  for (int v = 0; v < m.num_vertices(); ++v) EXPECT_EQ(s.vertex_of_dof[s.dof_of_vertex[v]], v);
  EXPECT_EQ(boundary_vertices(m).size(), 16u);
}

TEST(Solve, IdentitySystem) {
  SparseSystem s;
  s.matrix.resize(3, 3);
  s.matrix.setIdentity();
  s.rhs = Eigen::Vector3d(1.0, -2.0, 3.5);
  s.interior_count = 0;
  s.dof_of_vertex = {0, 1, 2};
  s.vertex_of_dof = {0, 1, 2};
  const auto u = solve(s);
  EXPECT_EQ(u, (std::vector<double>{1.0, -2.0, 3.5}));
}

TEST(Solve, LinearReproduction) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Mesh m = fixtures::jittered_square(7, 0.3, rng);
    ProblemData p = laplace([](const Point2& x) { return 0.3 + x.x() - 2.0 * x.y(); });
    const SymMat2 d = fixtures::random_spd(rng);
    p.diffusion = [d](const Point2&) { return d; };
    const auto u = solve(assemble(m, p, default_quadrature_2d()));
    for (int v = 0; v < m.num_vertices(); ++v) EXPECT_NEAR(u[v], p.dirichlet(m.points[v]), 1e-10);
  }
}

TEST(Solve, TwoTriangleSquareLinear) {
  const Mesh m = fixtures::two_triangle_square();
  const auto u = solve(assemble(m, laplace([](const Point2& x) { return x.x(); }), default_quadrature_2d()));
  for (int v = 0; v < 4; ++v) EXPECT_NEAR(u[v], m.points[v].x(), 1e-10);
}

TEST(Solve, LinearResidualOnPatch) {
  // A * interpolant equals the load for an exact linear solution
  const Mesh m = builtin_domain("unit_square", 2);
  ProblemData p = laplace([](const Point2& x) { return x.x() + x.y(); });
  p.diffusion = [](const Point2&) { return SymMat2{3.0, 1.0, 2.0}; };
  const SparseSystem s = assemble(m, p, default_quadrature_2d());
  Eigen::VectorXd ui(s.size());
  for (int d = 0; d < s.size(); ++d) ui[d] = p.dirichlet(m.points[s.vertex_of_dof[d]]);
  EXPECT_LE((s.matrix * ui - s.rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ErrorNorms, Examples) {
  const Mesh m = fixtures::two_triangle_square();
  const auto lin = [](const Point2& x) { return 2.0 * x.x() - x.y(); };
  const auto lin_g = [](const Point2&) { return Vec2(2.0, -1.0); };
  std::vector<double> u(4);
  for (int v = 0; v < 4; ++v) u[v] = lin(m.points[v]);
  const auto e = error_norms(m, u, lin, lin_g);
  EXPECT_NEAR(e.l2, 0.0, 1e-14);
  EXPECT_NEAR(e.h1, 0.0, 1e-14);

  const auto one = error_norms(m, std::vector<double>(4, 0.0), [](const Point2&) { return 1.0; },
                               [](const Point2&) { return Vec2(0.0, 0.0); });
  EXPECT_NEAR(one.l2, 1.0, 1e-14);
  EXPECT_THROW(error_norms(m, u, nullptr, lin_g), MissingExact);
}

TEST(ErrorNorms, QuadraticAgainstFineSum) {
  const Mesh m = fixtures::two_triangle_square();
  std::vector<double> u(4);
  for (int v = 0; v < 4; ++v) u[v] = m.points[v].x() * m.points[v].x();
  const auto e = error_norms(m, u, [](const Point2& x) { return x.x() * x.x(); },
                             [](const Point2& x) { return Vec2(2.0 * x.x(), 0.0); });
  // interpolant of x^2 on both triangles has gradient (1, 0); midpoint sum on a fine grid
  const int n = 2000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    s += (2.0 * x - 1.0) * (2.0 * x - 1.0) / n;
  }
  EXPECT_NEAR(e.h1, std::sqrt(s), 1e-6);
}
