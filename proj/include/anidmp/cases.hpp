#pragma once

#include "anidmp/dmp.hpp"
#include "anidmp/fem.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anidmp {

/// One of the benchmark boundary value problems.
struct CaseSpec {
  std::string name;
  std::string domain;  ///< builtin_domain name
  ProblemData problem;
  bool has_exact = false;
  /// Range the continuous solution stays in.
  std::pair<double, double> dmp_bounds{0.0, 0.0};
  SourceSign source_sign = SourceSign::zero;
};

enum class ThetaMode { constant, variable };

/// R(theta) diag(k1, k2) R(theta)^T
SymMat2 rotated_diffusion(double k1, double k2, double theta);

/// Square with a square hole, u = 0 outside and 2 on the hole, k1 = 1000,
/// k2 = 1, theta = pi/4 or pi sin(x) cos(y).
CaseSpec example1(ThetaMode mode);

/// 16 x 16 square with constant 45-degree anisotropy (1000 : 1) and ramped
/// boundary data between 0 and 1.
CaseSpec example2();

/// Unit square with a material interface at x = 0.5 and a known solution.
CaseSpec example3(bool interface_predefined);

/// Names accepted by case_by_name, in a stable order.
std::vector<std::string> case_names();

/// example1, example1_variable, example2, example3, example3_interface.
CaseSpec case_by_name(std::string_view name);

}  // namespace anidmp
