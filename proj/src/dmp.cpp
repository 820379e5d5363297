#include "anidmp/dmp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace anidmp {

ElementCondition check_element_condition(const ElementGeometry& tri, const SymMat2& d_k, double tol) {
  ElementCondition out;
  double qmax = 0.0;
  for (const auto& q : tri.q) qmax = std::max(qmax, q.squaredNorm());
  const double scale = d_k.spectral_norm() * qmax;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < kElementPairs.size(); ++p) {
    const auto [i, j] = kElementPairs[p];
    out.pair_values[p] = d_k.bilinear(tri.q[i], tri.q[j]);
    worst = std::max(worst, out.pair_values[p]);
  }
  out.worst_scaled = worst / scale;
  out.passed = worst <= tol * scale;
  return out;
}

ConditionReport check_mesh_condition(const Mesh& mesh, const ProblemData& problem,
                                     const QuadratureRule& rule, double tol) {
  ConditionReport report;
  report.tolerance = tol;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry g = mesh.element(t);
    const SymMat2 d_k = element_diffusion(problem, g, rule);
    const ElementCondition ec = check_element_condition(g, d_k, tol);
    report.worst_violation = std::max(report.worst_violation, ec.worst_scaled);
    if (ec.passed) continue;
    report.passed = false;
    double qmax = 0.0;
    for (const auto& q : g.q) qmax = std::max(qmax, q.squaredNorm());
    const double limit = tol * d_k.spectral_norm() * qmax;
    for (std::size_t p = 0; p < kElementPairs.size(); ++p) {
      if (ec.pair_values[p] > limit) {
        report.violating_elements.push_back({t, kElementPairs[p], ec.pair_values[p]});
      }
    }
  }
  return report;
}

MatrixVerdict check_stiffness(const SparseSystem& system, double tol) {
  MatrixVerdict v;
  const SparseMatrix& a = system.matrix;
  const int n = system.size();
  const int ni = system.interior_count;

  double max_offdiag = -std::numeric_limits<double>::infinity();
  double min_diag = std::numeric_limits<double>::infinity();
  double min_rowsum = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int row = 0; row < n; ++row) {
    double rowsum = 0.0;
    double diag = 0.0;
    for (SparseMatrix::InnerIterator it(a, row); it; ++it) {
      rowsum += it.value();
      if (it.col() == row) {
        diag = it.value();
      } else if (row < ni) {
        max_offdiag = std::max(max_offdiag, it.value());
      }
    }
    min_diag = std::min(min_diag, diag);
    min_rowsum = std::min(min_rowsum, rowsum);
    scale = std::max(scale, std::abs(diag));
  }
  if (n == 0) scale = 1.0;
  v.diag_scale = scale;
  v.max_offdiag = std::isfinite(max_offdiag) ? max_offdiag : 0.0;
  v.min_diag = std::isfinite(min_diag) ? min_diag : 0.0;
  v.min_rowsum = std::isfinite(min_rowsum) ? min_rowsum : 0.0;
  v.offdiag_ok = v.max_offdiag <= tol * scale;
  v.diag_ok = n == 0 || v.min_diag > 0.0;
  v.rowsum_ok = v.min_rowsum >= -tol * scale;

  if (ni == 0) {
    v.spd_ok = true;
  } else {
    const Eigen::SparseMatrix<double> a11 = a.topLeftCorner(ni, ni);
    const bool symmetric = (Eigen::SparseMatrix<double>(a11.transpose()) - a11).norm() <=
                           tol * scale * std::sqrt(static_cast<double>(a11.nonZeros()));
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(a11);
    v.spd_ok = symmetric && llt.info() == Eigen::Success;
  }
  return v;
}

SolutionBounds check_solution_bounds(const std::vector<double>& u,
                                     const std::vector<double>& boundary_values, SourceSign f_sign,
                                     double tol) {
  SolutionBounds b;
  if (!u.empty()) {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    b.u_min = *lo;
    b.u_max = *hi;
  }
  double g_max = 0.0;
  double g_min = 0.0;
  for (double g : boundary_values) {
    g_max = std::max(g_max, g);
    g_min = std::min(g_min, g);
  }
  b.upper_bound = g_max;
  b.lower_bound = g_min;
  b.upper_ok = b.u_max <= g_max + tol;
  b.lower_checked = f_sign == SourceSign::zero;
  b.lower_ok = !b.lower_checked || b.u_min >= g_min - tol;
  b.passed = f_sign != SourceSign::other && b.upper_ok && b.lower_ok;
  return b;
}

bool lss_condition(double alpha, double beta, double k1, double k2) {
  return -k1 * std::sin(beta) * std::sin(alpha) + k2 * std::cos(beta) * std::cos(alpha) <= 0.0 &&
         -k2 * std::cos(beta) <= 0.0 && -k2 * std::cos(alpha) <= 0.0;
}

void to_json(nlohmann::json& j, const ElementViolation& v) {
  j = {{"element", v.element}, {"pair", v.pair}, {"value", v.value}};
}

void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = {{"passed", r.passed},
       {"worst_violation", r.worst_violation},
       {"tolerance", r.tolerance},
       {"violating_elements", r.violating_elements}};
}

void to_json(nlohmann::json& j, const MatrixVerdict& v) {
  j = {{"offdiag_ok", v.offdiag_ok}, {"diag_ok", v.diag_ok},     {"rowsum_ok", v.rowsum_ok},
       {"spd_ok", v.spd_ok},         {"max_offdiag", v.max_offdiag}, {"min_diag", v.min_diag},
       {"min_rowsum", v.min_rowsum}, {"diag_scale", v.diag_scale}};
}

void to_json(nlohmann::json& j, const SolutionBounds& b) {
  j = {{"u_min", b.u_min},
       {"u_max", b.u_max},
       {"upper_bound", b.upper_bound},
       {"lower_bound", b.lower_bound},
       {"upper_ok", b.upper_ok},
       {"lower_ok", b.lower_ok},
       {"lower_checked", b.lower_checked},
       {"passed", b.passed}};
}

}  // namespace anidmp
