#pragma once

#include "anidmp/metric.hpp"

#include <array>
#include <vector>

namespace anidmp {

enum class FlipCriterion {
  /// Delaunay test in the metric averaged over the four quad vertices.
  metric_delaunay,
  /// Flip when the larger alignment quality of the two triangles drops.
  alignment,
};

struct AdaptOptions {
  int target_elements = 1000;
  int max_sweeps = 20;
  double split_threshold = 1.4142135623730951;
  double collapse_threshold = 0.7071067811865476;
  double smooth_relaxation = 0.7;
  FlipCriterion flip = FlipCriterion::metric_delaunay;
};

/// Edge metric lengths are binned at these upper limits; the last bin is open.
inline constexpr std::array<double, 6> kLengthBinEdges{0.5, 0.7071067811865476, 1.0,
                                                       1.4142135623730951, 2.0, 4.0};

struct QualityReport {
  double q_ali_max = 1.0;
  double q_ali_mean = 1.0;
  double q_eq_max = 1.0;
  int element_count = 0;
  std::array<int, kLengthBinEdges.size() + 1> length_histogram{};
};

/// sqrt(e^T ((Mp + Mq)/2) e) with e = q - p.
double metric_edge_length(const Point2& p, const Point2& q, const SymMat2& mp, const SymMat2& mq);

/// (tr J / 2) / sqrt(det J) with J = F'^T M F', F' the map from the
/// equilateral unit-area reference. Throws DegenerateElement.
double quality_alignment(const ElementGeometry& tri, const SymMat2& m);

/// max_K rho_K |K| N / sigma_h with rho_K = sqrt(det M_K), M_K the mean of
/// the vertex metrics.
double quality_equidistribution(const Mesh& mesh, const VertexMetricField& field);

QualityReport quality_report(const Mesh& mesh, const VertexMetricField& field);

/// Multiplies the field by target * (sqrt(3)/4) / sigma_h.
VertexMetricField scale_metric_for_target(const VertexMetricField& field, const Mesh& mesh,
                                          int target_elements);

struct AdaptResult {
  Mesh mesh;
  /// Metric interpolated at the vertices of `mesh` (scaled to the target).
  VertexMetricField field;
  int sweeps = 0;
  /// Element count ended more than 50% away from the target.
  bool stalled = false;
  QualityReport quality;
};

/// Remeshes toward a unit mesh in the metric carried on `mesh`. The field is
/// first scaled to options.target_elements.
AdaptResult adapt_mesh(const Mesh& mesh, const VertexMetricField& field, const AdaptOptions& options);

/// Barycentric (entrywise) interpolation of a vertex metric field; points
/// outside the mesh use the nearest triangle. Results are clamped SPD.
class MetricInterpolator {
public:
  MetricInterpolator(const Mesh& mesh, const VertexMetricField& field);

  [[nodiscard]] SymMat2 operator()(const Point2& p, int* clamp_events = nullptr) const;

private:
  void cell_of(double x, double y, int& ix, int& iy) const;

  const Mesh* mesh_;
  const VertexMetricField* field_;
  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace anidmp
