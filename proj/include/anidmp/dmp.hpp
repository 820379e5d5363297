#pragma once

#include "anidmp/fem.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <limits>
#include <vector>

namespace anidmp {

inline constexpr double kDefaultDmpTolerance = 1e-12;

/// Anisotropic non-obtuse check on one element.
struct ElementCondition {
  /// q_i^T D_K q_j for the pairs (0,1), (0,2), (1,2).
  std::array<double, 3> pair_values{};
  /// Largest pair value divided by ||D_K|| * max_i ||q_i||^2.
  double worst_scaled = 0.0;
  bool passed = false;
};

inline constexpr std::array<std::array<int, 2>, 3> kElementPairs{{{0, 1}, {0, 2}, {1, 2}}};

ElementCondition check_element_condition(const ElementGeometry& tri, const SymMat2& d_k,
                                         double tol = kDefaultDmpTolerance);

struct ElementViolation {
  int element = 0;
  std::array<int, 2> pair{};  ///< local vertex indices
  double value = 0.0;         ///< q_i^T D_K q_j
};

struct ConditionReport {
  bool passed = true;
  /// Largest scaled pair value over the mesh; passed <=> worst_violation <= tolerance.
  double worst_violation = -std::numeric_limits<double>::infinity();
  double tolerance = kDefaultDmpTolerance;
  std::vector<ElementViolation> violating_elements;
};

ConditionReport check_mesh_condition(const Mesh& mesh, const ProblemData& problem,
                                     const QuadratureRule& rule,
                                     double tol = kDefaultDmpTolerance);

/// Stieltjes-route M-matrix verdict on an assembled system.
struct MatrixVerdict {
  bool offdiag_ok = false;
  bool diag_ok = false;
  bool rowsum_ok = false;
  bool spd_ok = false;
  double max_offdiag = 0.0;  ///< largest off-diagonal in interior rows
  double min_diag = 0.0;
  double min_rowsum = 0.0;
  double diag_scale = 0.0;   ///< max |a_ii| used to scale the tolerance

  [[nodiscard]] bool all() const { return offdiag_ok && diag_ok && rowsum_ok && spd_ok; }
};

MatrixVerdict check_stiffness(const SparseSystem& system, double tol = kDefaultDmpTolerance);

struct SolutionBounds {
  double u_min = 0.0;
  double u_max = 0.0;
  double upper_bound = 0.0;  ///< max{0, max g}
  double lower_bound = 0.0;  ///< min{0, min g}; checked only when f == 0
  bool upper_ok = false;
  bool lower_ok = true;
  bool lower_checked = false;
  bool passed = false;
};

enum class SourceSign { nonpositive, zero, other };

/// Checks the discrete maximum principle bounds of a solution against its
/// Dirichlet data. With SourceSign::other only the extremes are reported.
SolutionBounds check_solution_bounds(const std::vector<double>& u,
                                     const std::vector<double>& boundary_values, SourceSign f_sign,
                                     double tol = 1e-10);

/// Two-angle mesh condition for a triangle whose base edge lies along the
/// primary diffusion direction (eigenvalue k1).
bool lss_condition(double alpha, double beta, double k1, double k2);

void to_json(nlohmann::json& j, const ElementViolation& v);
void to_json(nlohmann::json& j, const ConditionReport& r);
void to_json(nlohmann::json& j, const MatrixVerdict& v);
void to_json(nlohmann::json& j, const SolutionBounds& b);

}  // namespace anidmp
