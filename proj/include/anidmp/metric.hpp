#pragma once

#include "anidmp/fem.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anidmp {

enum class MetricKind { unif, dmp, adap, dmp_adap };

std::string_view to_string(MetricKind kind);
/// Throws Error for an unknown name.
MetricKind parse_metric_kind(std::string_view name);

/// Smallest eigenvalue kept in a metric; smaller ones are clamped.
inline constexpr double kMetricEigenFloor = 1e-12;

struct VertexMetricField {
  std::vector<SymMat2> metrics;
  MetricKind kind = MetricKind::unif;
  /// Number of tensors whose eigenvalues had to be raised to the floor.
  int clamp_events = 0;

  [[nodiscard]] std::size_t size() const { return metrics.size(); }
};

struct HessianField {
  std::vector<SymMat2> hessians;
};

struct RegularizationState {
  double alpha_h = 0.0;
  /// sum_K rho_K |K| with the element densities used to build the field.
  double sigma_h = 0.0;
  double domain_area = 0.0;
  /// All recovered Hessians vanished; the field fell back to unit density.
  bool degenerate = false;
};

/// Raises eigenvalues below `floor` to `floor`; counts the event.
SymMat2 clamp_spd(const SymMat2& m, double floor, int* events);

/// Least-squares quadratic fit over the 1-ring of each vertex (2-ring or wider
/// when the ring has fewer than six nodes or the fit is ill-conditioned).
/// Throws PatchTooSmall when no ring up to the third has six nodes.
HessianField recover_hessian(const Mesh& mesh, const std::vector<double>& u);

/// sqrt(H^2): eigenvalues replaced by their absolute values.
SymMat2 abs_tensor(const SymMat2& h);

/// det(D_K)^{-1/2} ||D_K^{-1}|| mean_k ||D_K |H_k|||^2 over the given Hessian
/// samples (spectral norms).
double compute_BK(const SymMat2& d_k, std::span<const SymMat2> hessian_samples);

struct AlphaResult {
  double alpha_h = 0.0;
  bool degenerate = false;
};

/// alpha_h = ((1/|Omega|) sum |K| B_K^{1/2})^2.
AlphaResult compute_alpha_h(std::span<const double> b_values, std::span<const double> areas,
                            double domain_area);

/// Identity metric at every vertex.
VertexMetricField metric_unif(const Mesh& mesh);

/// Element metric D_K^{-1}, averaged to vertices with area weights.
VertexMetricField metric_dmp(const ProblemData& problem, const Mesh& mesh,
                             const QuadratureRule& rule);

/// theta_K D_K^{-1} with theta_K = (1 + B_K/alpha_h)^{1/2} det(D_K)^{1/2}.
std::pair<VertexMetricField, RegularizationState> metric_dmp_adap(const ProblemData& problem,
                                                                  const Mesh& mesh,
                                                                  const std::vector<double>& u,
                                                                  const QuadratureRule& rule);

/// Hessian-based metric minimising the H1 interpolation error bound, with
/// alpha_h solved by bisection so that sum |K| rho_K = 2 |Omega|.
std::pair<VertexMetricField, RegularizationState> metric_adap(const Mesh& mesh,
                                                              const std::vector<double>& u);

/// sum_K sqrt(det M_K) |K| with M_K the mean of the three vertex metrics.
double sigma_h(const Mesh& mesh, const VertexMetricField& field);

/// Element values of B_K with D_K from the quadrature rule.
std::vector<double> element_bk(const Mesh& mesh, const ProblemData& problem,
                               const HessianField& hessians, const QuadratureRule& rule);

/// sum_K |K| B_K^{1/2}, the solution-dependent factor of the H1 error bound.
double error_bound_factor(const Mesh& mesh, const ProblemData& problem,
                          const HessianField& hessians, const QuadratureRule& rule);

/// Both sides of the trace inequalities
///   |tr(A^T S A)| <= tr(A^T A) ||S||
///   ||S||^{-1} tr(A^T S A) <= tr(A^T A) <= tr(A^T S A) ||S^{-1}||   (S SPD)
struct TraceBounds {
  double abs_trace = 0.0;
  double trace_norm = 0.0;
  bool spd = false;
  double spd_lower = 0.0;
  double spd_middle = 0.0;
  double spd_upper = 0.0;
};

TraceBounds trace_bounds(const Mat2& a, const SymMat2& s);

/// "metric N" followed by N lines "m11 m12 m22".
std::string save_metric(const VertexMetricField& field);
VertexMetricField load_metric(std::string_view text);

}  // namespace anidmp
