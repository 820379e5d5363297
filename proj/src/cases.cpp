#include "anidmp/cases.hpp"

#include "anidmp/errors.hpp"

#include <cmath>
#include <numbers>

namespace anidmp {

SymMat2 rotated_diffusion(double k1, double k2, double theta) {
  return SymMat2::from_eigen(k1, k2, theta);
}

CaseSpec example1(ThetaMode mode) {
  CaseSpec c;
  c.name = mode == ThetaMode::constant ? "example1" : "example1_variable";
  c.domain = "square_with_hole";
  if (mode == ThetaMode::constant) {
    const SymMat2 d = rotated_diffusion(1000.0, 1.0, std::numbers::pi / 4.0);
    c.problem.diffusion = [d](const Point2&) { return d; };
  } else {
    c.problem.diffusion = [](const Point2& p) {
      return rotated_diffusion(1000.0, 1.0, std::numbers::pi * std::sin(p.x()) * std::cos(p.y()));
    };
  }
  c.problem.source = [](const Point2&) { return 0.0; };
  c.problem.dirichlet = [](const Point2& p) {
    constexpr double lo = 4.0 / 9.0 - 1e-9;
    constexpr double hi = 5.0 / 9.0 + 1e-9;
    const bool inner = p.x() > lo && p.x() < hi && p.y() > lo && p.y() < hi;
    return inner ? 2.0 : 0.0;
  };
  c.dmp_bounds = {0.0, 2.0};
  c.source_sign = SourceSign::zero;
  return c;
}

CaseSpec example2() {
  CaseSpec c;
  c.name = "example2";
  c.domain = "square16";
  const SymMat2 d{500.5, 499.5, 500.5};
  c.problem.diffusion = [d](const Point2&) { return d; };
  c.problem.source = [](const Point2&) { return 0.0; };
  c.problem.dirichlet = [](const Point2& p) {
    constexpr double eps = 1e-9;
    const double x = p.x();
    const double y = p.y();
    if (std::abs(y) < eps || std::abs(x - 16.0) < eps) return 0.0;
    if (std::abs(x) < eps) return y < 2.0 ? 0.5 * y : 1.0;
    if (std::abs(y - 16.0) < eps) return x <= 14.0 ? 1.0 : 8.0 - 0.5 * x;
    return 0.0;
  };
  c.dmp_bounds = {0.0, 1.0};
  c.source_sign = SourceSign::zero;
  return c;
}

namespace {

double example3_exact(const Point2& p) {
  const double x = p.x();
  const double y = p.y();
  if (x <= 0.5) return 1.0 - 2.0 * y * y + 4.0 * x * y + 2.0 * y + 6.0 * x;
  return -2.0 * y * y + 1.6 * x * y - 0.6 * x + 3.2 * y + 4.3;
}

Vec2 example3_gradient(const Point2& p) {
  const double x = p.x();
  const double y = p.y();
  if (x <= 0.5) return {4.0 * y + 6.0, -4.0 * y + 4.0 * x + 2.0};
  return {1.6 * y - 0.6, -4.0 * y + 1.6 * x + 3.2};
}

}  // namespace

CaseSpec example3(bool interface_predefined) {
  CaseSpec c;
  c.name = interface_predefined ? "example3_interface" : "example3";
  c.domain = interface_predefined ? "unit_square_interface" : "unit_square";
  // x == 0.5 takes the right-hand branch for D and f
  c.problem.diffusion = [](const Point2& p) {
    return p.x() < 0.5 ? SymMat2::identity() : SymMat2{10.0, 3.0, 1.0};
  };
  c.problem.source = [](const Point2& p) { return p.x() < 0.5 ? 4.0 : -5.6; };
  c.problem.dirichlet = example3_exact;
  c.problem.exact = example3_exact;
  c.problem.exact_gradient = example3_gradient;
  c.has_exact = true;
  // f changes sign, so only the range of the exact solution is recorded
  c.dmp_bounds = {1.0, 6.5};
  c.source_sign = SourceSign::other;
  return c;
}

std::vector<std::string> case_names() {
  return {"example1", "example1_variable", "example2", "example3", "example3_interface"};
}

CaseSpec case_by_name(std::string_view name) {
  if (name == "example1") return example1(ThetaMode::constant);
  if (name == "example1_variable") return example1(ThetaMode::variable);
  if (name == "example2") return example2();
  if (name == "example3") return example3(false);
  if (name == "example3_interface") return example3(true);
  throw UnknownCase("unknown case '" + std::string(name) + "'");
}

}  // namespace anidmp
