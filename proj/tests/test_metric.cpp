#include "anidmp/cases.hpp"
#include "anidmp/errors.hpp"
#include "anidmp/metric.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace anidmp;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const Mesh& m, const std::function<double(const Point2&)>& f) {
  std::vector<double> u(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) u[v] = f(m.points[v]);
  return u;
}

ProblemData constant_diffusion(const SymMat2& d) {
  ProblemData p;
  p.diffusion = [d](const Point2&) { return d; };
  return p;
}

void expect_sym_near(const SymMat2& a, const SymMat2& b, double tol) {
  EXPECT_NEAR(a.a11, b.a11, tol);
  EXPECT_NEAR(a.a12, b.a12, tol);
  EXPECT_NEAR(a.a22, b.a22, tol);
}

}  // namespace

TEST(MetricKind, Names) {
  for (auto k : {MetricKind::unif, MetricKind::dmp, MetricKind::adap, MetricKind::dmp_adap})
    EXPECT_EQ(parse_metric_kind(to_string(k)), k);
  EXPECT_THROW(parse_metric_kind("bamg"), Error);
}

TEST(HessianRecovery, QuadraticExact) {
  std::mt19937_64 rng(41);
  const Mesh m = fixtures::jittered_square(10, 0.25, rng);
  const auto h = recover_hessian(m, sample(m, [](const Point2& p) { return p.x() * p.x() + p.x() * p.y(); }));
  ASSERT_EQ(h.hessians.size(), static_cast<std::size_t>(m.num_vertices()));
  for (const auto& x : h.hessians) expect_sym_near(x, SymMat2{2.0, 1.0, 0.0}, 1e-8);
}

TEST(HessianRecovery, RandomQuadratics) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> c(-5.0, 5.0);
  const Mesh m = builtin_domain("square_with_hole", 18);
  for (int k = 0; k < 50; ++k) {
    const double c0 = c(rng), c1 = c(rng), c2 = c(rng), c3 = c(rng), c4 = c(rng), c5 = c(rng);
    const auto h = recover_hessian(m, sample(m, [&](const Point2& p) {
      const double x = p.x(), y = p.y();
      return c0 + c1 * x + c2 * y + c3 * x * x + c4 * x * y + c5 * y * y;
    }));
    for (const auto& x : h.hessians) expect_sym_near(x, SymMat2{2 * c3, c4, 2 * c5}, 1e-8);
  }
}

TEST(HessianRecovery, LinearGivesZero) {
  const Mesh m = builtin_domain("unit_square", 8);
  const auto h = recover_hessian(m, sample(m, [](const Point2& p) { return 3.0 * p.x() - p.y() + 1.0; }));
  for (const auto& x : h.hessians) expect_sym_near(x, SymMat2{}, 1e-10);
}

TEST(HessianRecovery, SineAgainstAnalytic) {
  const Mesh m = builtin_domain("unit_square", 32);
  const auto h = recover_hessian(m, sample(m, [](const Point2& p) { return std::sin(kPi * p.x()); }));
  for (int v = 0; v < m.num_vertices(); ++v) {
    const auto& p = m.points[v];
    if (p.x() < 0.1 || p.x() > 0.9 || p.y() < 0.1 || p.y() > 0.9) continue;
    const double exact = -kPi * kPi * std::sin(kPi * p.x());
    EXPECT_NEAR(h.hessians[v].a11, exact, 0.05 * std::abs(exact));
  }
}

TEST(HessianRecovery, TooSmallPatch) {
  const Mesh m = fixtures::two_triangle_square();
  EXPECT_THROW(recover_hessian(m, {0, 1, 2, 3}), PatchTooSmall);
}

TEST(AbsTensor, Examples) {
  expect_sym_near(abs_tensor(SymMat2::diag(2, -3)), SymMat2::diag(2, 3), 1e-15);
  expect_sym_near(abs_tensor(SymMat2{}), SymMat2{}, 0.0);
  expect_sym_near(abs_tensor(SymMat2{0, 1, 0}), SymMat2::identity(), 1e-15);
}

TEST(ComputeBK, Examples) {
  const std::vector<SymMat2> zero(3), id(3, SymMat2::identity());
  EXPECT_EQ(compute_BK(SymMat2::identity(), zero), 0.0);
  EXPECT_NEAR(compute_BK(SymMat2::identity(), id), 1.0, 1e-15);
  EXPECT_NEAR(compute_BK(SymMat2::diag(4, 1), id), 8.0, 1e-14);
}

TEST(ComputeAlpha, Examples) {
  const std::vector<double> zeros{0.0, 0.0}, halves{0.5, 0.5};
  const auto z = compute_alpha_h(zeros, halves, 1.0);
  EXPECT_EQ(z.alpha_h, 0.0);
  EXPECT_TRUE(z.degenerate);
  const std::vector<double> four{4.0}, one{1.0};
  EXPECT_NEAR(compute_alpha_h(four, one, 1.0).alpha_h, 4.0, 1e-15);
  const std::vector<double> b{1.0, 9.0};
  const auto a = compute_alpha_h(b, halves, 1.0);
  EXPECT_NEAR(a.alpha_h, 4.0, 1e-15);
  EXPECT_FALSE(a.degenerate);
  // the single-element density: rho = sqrt(1 + B/alpha) = sqrt(2) <= 2
  EXPECT_NEAR(std::sqrt(1.0 + 4.0 / compute_alpha_h(four, one, 1.0).alpha_h), std::sqrt(2.0), 1e-15);
}

TEST(MetricDmp, ConstantDiffusion) {
  const Mesh m = builtin_domain("unit_square", 6);
  const auto rule = default_quadrature_2d();
  for (const auto& x : metric_dmp(constant_diffusion(SymMat2::identity()), m, rule).metrics)
    expect_sym_near(x, SymMat2::identity(), 1e-14);
  const auto f = metric_dmp(constant_diffusion(SymMat2::diag(1000, 1)), m, rule);
  EXPECT_EQ(f.kind, MetricKind::dmp);
  EXPECT_EQ(f.clamp_events, 0);
  for (const auto& x : f.metrics) expect_sym_near(x, SymMat2::diag(0.001, 1.0), 1e-15);
}

TEST(MetricDmp, Example1VariableAtThetaZero) {
  // theta = pi sin(x) cos(y) vanishes on x = 0; D^-1 keeps the slow direction along x
  const SymMat2 d = example1(ThetaMode::variable).problem.diffusion({0.0, 0.3});
  const auto e = d.inverse().eigen();
  EXPECT_NEAR(std::abs(e.vectors[0].y()), 0.0, 1e-10);
}

TEST(MetricDmpAdap, ZeroHessianIsIdentity) {
  const Mesh m = builtin_domain("unit_square", 8);
  const auto [f, s] = metric_dmp_adap(constant_diffusion(SymMat2::identity()), m,
                                      sample(m, [](const Point2& p) { return p.x() + 2 * p.y(); }),
                                      default_quadrature_2d());
  EXPECT_TRUE(s.degenerate);
  EXPECT_NEAR(s.sigma_h, 1.0, 1e-12);
  for (const auto& x : f.metrics) expect_sym_near(x, SymMat2::identity(), 1e-12);
}

TEST(MetricDmpAdap, ZeroHessianUnitDensity) {
  const Mesh m = builtin_domain("unit_square", 8);
  const SymMat2 d = SymMat2::from_eigen(1000, 1, kPi / 4);
  const auto [f, s] =
      metric_dmp_adap(constant_diffusion(d), m, sample(m, [](const Point2& p) { return p.y(); }), default_quadrature_2d());
  for (const auto& x : f.metrics) EXPECT_NEAR(std::sqrt(x.det()), 1.0, 1e-12);
}

TEST(MetricDmpAdap, ConstantHessianIsMultipleOfDmp) {
  const Mesh m = builtin_domain("unit_square", 8);
  const SymMat2 d = SymMat2::from_eigen(50, 2, 0.3);
  const auto rule = default_quadrature_2d();
  const auto p = constant_diffusion(d);
  const auto u = sample(m, [](const Point2& x) { return x.x() * x.x() + 0.5 * x.y() * x.y() - x.x() * x.y(); });
  const auto dmp = metric_dmp(p, m, rule);
  const auto [adap, s] = metric_dmp_adap(p, m, u, rule);
  const double ratio = adap.metrics[0].a11 / dmp.metrics[0].a11;
  EXPECT_GT(ratio, 0.0);
  for (std::size_t v = 0; v < dmp.size(); ++v) expect_sym_near(adap.metrics[v], dmp.metrics[v] * ratio, 1e-12 * ratio);
  EXPECT_LE(s.sigma_h, 2.0 * s.domain_area * (1 + 1e-12));
}

TEST(MetricAdap, Examples) {
  const Mesh m = builtin_domain("unit_square", 10);
  {
    const auto [f, s] = metric_adap(m, sample(m, [](const Point2& p) { return p.x(); }));
    EXPECT_TRUE(s.degenerate);
    for (const auto& x : f.metrics) expect_sym_near(x, SymMat2::identity(), 0.0);
  }
  {
    const auto [f, s] = metric_adap(m, sample(m, [](const Point2& p) { return p.x() * p.x() + p.y() * p.y(); }));
    for (const auto& x : f.metrics) EXPECT_NEAR(x.a12 / x.a11, 0.0, 1e-8);
    for (const auto& x : f.metrics) EXPECT_NEAR(x.a22 / x.a11, 1.0, 1e-8);
    EXPECT_LE(s.sigma_h, 2.0 * s.domain_area * (1 + 1e-12));
  }
  {
    const auto [f, s] = metric_adap(m, sample(m, [](const Point2& p) { return p.x() * p.x(); }));
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (m.markers[v] != 0) continue;
      const auto e = f.metrics[v].eigen();
      EXPECT_NEAR(std::abs(e.vectors[1].y()), 0.0, 1e-6);
      EXPECT_GT(e.values[1], e.values[0]);
    }
    EXPECT_NEAR(s.sigma_h, 2.0 * s.domain_area, 2e-3 * s.domain_area);
  }
}

TEST(SigmaH, Examples) {
  const Mesh m = builtin_domain("unit_square", 5);
  VertexMetricField f = metric_unif(m);
  EXPECT_NEAR(sigma_h(m, f), 1.0, 1e-14);
  for (auto& x : f.metrics) x = SymMat2::diag(4, 4);
  EXPECT_NEAR(sigma_h(m, f), 4.0, 1e-14);
}

TEST(SigmaH, BudgetOnRandomSolutions) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> c(-3.0, 3.0);
  const auto rule = default_quadrature_2d();
  for (int k = 0; k < 20; ++k) {
    const Mesh m = fixtures::jittered_square(9, 0.2, rng);
    const double a = c(rng), b = c(rng), w = 2.0 + c(rng);
    const auto u = sample(m, [&](const Point2& p) { return std::tanh(w * (a * p.x() + b * p.y() - 0.3)); });
    const auto p = constant_diffusion(fixtures::random_spd(rng));
    const auto [f1, s1] = metric_dmp_adap(p, m, u, rule);
    const auto [f2, s2] = metric_adap(m, u);
    EXPECT_LE(s1.sigma_h, 2.0 * s1.domain_area * (1 + 1e-12));
    EXPECT_LE(s2.sigma_h, 2.0 * s2.domain_area * (1 + 1e-12));
    EXPECT_EQ(f1.clamp_events, 0);
  }
}

TEST(ErrorBoundFactor, ZeroAndSmoothLimit) {
  const auto rule = default_quadrature_2d();
  const auto p = constant_diffusion(SymMat2::identity());
  {
    const Mesh m = builtin_domain("unit_square", 6);
    EXPECT_EQ(error_bound_factor(m, p, HessianField{std::vector<SymMat2>(m.num_vertices())}, rule), 0.0);
  }
  // u = sin(pi x) sin(pi y): ||H||_2 = pi^2 (|sin sin| + |cos cos|) integrates to 8
  const Mesh m = builtin_domain("unit_square", 45);
  const auto u = sample(m, [](const Point2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); });
  EXPECT_NEAR(error_bound_factor(m, p, recover_hessian(m, u), rule), 8.0, 0.4);
}

TEST(TraceBounds, Examples) {
  const auto t = trace_bounds(Mat2::Identity(), SymMat2::diag(1, 2));
  EXPECT_NEAR(t.abs_trace, 3.0, 1e-15);
  EXPECT_NEAR(t.trace_norm, 4.0, 1e-15);
  const auto z = trace_bounds(Mat2::Identity(), SymMat2{});
  EXPECT_EQ(z.abs_trace, 0.0);
  EXPECT_EQ(z.trace_norm, 0.0);
  const auto a0 = trace_bounds(Mat2::Zero(), SymMat2::diag(1, 2));
  EXPECT_EQ(a0.abs_trace, 0.0);
  EXPECT_EQ(a0.trace_norm, 0.0);
}

TEST(TraceBounds, RandomPairs) {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> n;
  for (int k = 0; k < 1000; ++k) {
    Mat2 a;
    a << n(rng), n(rng), n(rng), n(rng);
    const SymMat2 s = fixtures::random_spd(rng);
    const SymMat2 g{n(rng), n(rng), n(rng)};
    const auto tg = trace_bounds(a, g);
    EXPECT_LE(tg.abs_trace, tg.trace_norm * (1 + 1e-12));
    const auto ts = trace_bounds(a, s);
    ASSERT_TRUE(ts.spd);
    EXPECT_LE(ts.spd_lower, ts.spd_middle * (1 + 1e-12));
    EXPECT_LE(ts.spd_middle, ts.spd_upper * (1 + 1e-12));
  }
}

TEST(MetricIo, RoundTripAndErrors) {
  VertexMetricField f;
  f.metrics = {SymMat2{1.0 / 3.0, 1e-300, 7.25}, SymMat2::identity()};
  const auto back = load_metric(save_metric(f));
  EXPECT_EQ(back.metrics, f.metrics);
  EXPECT_EQ(save_metric(back), save_metric(f));
  EXPECT_THROW(load_metric("metric 2\n1 0 1\n"), ParseError);
  EXPECT_THROW(load_metric("1 0 1\n"), ParseError);
  EXPECT_THROW(load_metric("metric 1\n1 0\n"), ParseError);
}

TEST(ClampSpd, RaisesSmallEigenvalues) {
  int events = 0;
  const SymMat2 c = clamp_spd(SymMat2::diag(1.0, -2.0), 1e-12, &events);
  EXPECT_EQ(events, 1);
  EXPECT_NEAR(c.a22, 1e-12, 1e-20);
  EXPECT_EQ(clamp_spd(SymMat2::identity(), 1e-12, &events), SymMat2::identity());
  EXPECT_EQ(events, 1);
}
