#include "anidmp/metric.hpp"

#include "anidmp/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace anidmp {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::unif: return "unif";
    case MetricKind::dmp: return "dmp";
    case MetricKind::adap: return "adap";
    case MetricKind::dmp_adap: return "dmp_adap";
  }
  return "unif";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "unif") return MetricKind::unif;
  if (name == "dmp") return MetricKind::dmp;
  if (name == "adap") return MetricKind::adap;
  if (name == "dmp_adap") return MetricKind::dmp_adap;
  throw Error("unknown metric kind '" + std::string(name) + "'");
}

SymMat2 clamp_spd(const SymMat2& m, double floor, int* events) {
  const auto e = m.eigen();
  if (e.values[0] >= floor && m.is_finite()) return m;
  if (events) ++*events;
  return map_eigenvalues(m, [floor](double l) { return std::isfinite(l) ? std::max(l, floor) : floor; });
}

SymMat2 abs_tensor(const SymMat2& h) {
  return map_eigenvalues(h, [](double l) { return std::abs(l); });
}

// ---------------------------------------------------------------------------
// Hessian recovery

namespace {

struct QuadraticFit {
  bool ok = false;
  SymMat2 hessian;
};

QuadraticFit fit_quadratic(const Mesh& mesh, const std::vector<double>& u, int center,
                           const std::vector<int>& nodes, bool accept_ill_conditioned) {
  if (nodes.size() < 6) return {};
  const Point2 c = mesh.points[static_cast<std::size_t>(center)];
  double h = 0.0;
  for (int n : nodes) h = std::max(h, (mesh.points[static_cast<std::size_t>(n)] - c).norm());
  if (!(h > 0.0)) return {};

  const auto rows = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd a(rows, 6);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int n = nodes[static_cast<std::size_t>(r)];
    const Vec2 d = (mesh.points[static_cast<std::size_t>(n)] - c) / h;
    a.row(r) << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(), d.y() * d.y();
    rhs[r] = u[static_cast<std::size_t>(n)];
  }
  Eigen::VectorXd col_scale(6);
  for (int j = 0; j < 6; ++j) {
    col_scale[j] = a.col(j).norm();
    if (!(col_scale[j] > 0.0)) {
      if (!accept_ill_conditioned) return {};
      col_scale[j] = 1.0;
    }
    a.col(j) /= col_scale[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / std::max(sv[sv.size() - 1], 1e-300);
  if (cond > 1e12 && !accept_ill_conditioned) return {};
  svd.setThreshold(1e-12);
  Eigen::VectorXd coef = svd.solve(rhs);
  coef = coef.cwiseQuotient(col_scale);
  // quadratic part at rounding level of the data: treat as exactly linear
  const double data_scale = rhs.cwiseAbs().maxCoeff();
  if (std::max({std::abs(coef[3]), std::abs(coef[4]), std::abs(coef[5])}) <= 1e-10 * data_scale) {
    return {true, SymMat2{}};
  }
  const double inv_h2 = 1.0 / (h * h);
  return {true, SymMat2{2.0 * coef[3] * inv_h2, coef[4] * inv_h2, 2.0 * coef[5] * inv_h2}};
}

/// Adds the vertices of every triangle of `region` touching the node set.
std::vector<int> grow_ring(const Mesh& mesh, const Connectivity& conn, const std::vector<int>& nodes,
                           int region) {
  std::vector<int> out = nodes;
  for (int n : nodes) {
    for (int t : conn.vertex_triangles[static_cast<std::size_t>(n)]) {
      const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
      if (tri.region != region) continue;
      out.insert(out.end(), tri.v.begin(), tri.v.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

HessianField recover_hessian(const Mesh& mesh, const std::vector<double>& u) {
  const Connectivity conn = build_connectivity(mesh);
  HessianField field;
  field.hessians.resize(static_cast<std::size_t>(mesh.num_vertices()));
  constexpr int kMaxRings = 3;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    // u is only piecewise smooth across region boundaries: fit each side
    // separately and average
    std::vector<int> regions;
    for (int t : conn.vertex_triangles[static_cast<std::size_t>(v)]) {
      regions.push_back(mesh.triangles[static_cast<std::size_t>(t)].region);
    }
    std::sort(regions.begin(), regions.end());
    regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
    SymMat2 sum{0.0, 0.0, 0.0};
    for (int region : regions) {
      std::vector<int> nodes{v};
      QuadraticFit fit;
      for (int ring = 1; ring <= kMaxRings && !fit.ok; ++ring) {
        nodes = grow_ring(mesh, conn, nodes, region);
        fit = fit_quadratic(mesh, u, v, nodes, ring == kMaxRings);
      }
      if (!fit.ok) {
        throw PatchTooSmall("vertex " + std::to_string(v) + " has only " +
                            std::to_string(nodes.size()) + " nodes within three rings");
      }
      sum += fit.hessian;
    }
    field.hessians[static_cast<std::size_t>(v)] = (1.0 / static_cast<double>(regions.size())) * sum;
  }
  return field;
}

// ---------------------------------------------------------------------------
// error bound ingredients

double compute_BK(const SymMat2& d_k, std::span<const SymMat2> hessian_samples) {
  if (hessian_samples.empty()) return 0.0;
  const auto eig = d_k.eigen();
  const double inv_norm = 1.0 / eig.values[0];
  const Mat2 d = d_k.matrix();
  double mean = 0.0;
  for (const auto& h : hessian_samples) {
    const double n = spectral_norm(Mat2(d * abs_tensor(h).matrix()));
    mean += n * n;
  }
  mean /= static_cast<double>(hessian_samples.size());
  return inv_norm * mean / std::sqrt(d_k.det());
}

AlphaResult compute_alpha_h(std::span<const double> b_values, std::span<const double> areas,
                            double domain_area) {
  double sum = 0.0;
  double b_max = 0.0;
  for (std::size_t k = 0; k < b_values.size(); ++k) {
    sum += areas[k] * std::sqrt(std::max(0.0, b_values[k]));
    b_max = std::max(b_max, b_values[k]);
  }
  const double alpha = std::pow(sum / domain_area, 2.0);
  if (!(b_max > 0.0) || !(alpha > 1e-14 * b_max)) return {0.0, true};
  return {alpha, false};
}

namespace {

std::vector<double> element_areas(const Mesh& mesh) {
  std::vector<double> areas(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) areas[static_cast<std::size_t>(t)] = mesh.signed_area(t);
  return areas;
}

/// Area-weighted average of element tensors at the vertices.
VertexMetricField average_to_vertices(const Mesh& mesh, const std::vector<SymMat2>& element_metric,
                                      const std::vector<double>& areas, MetricKind kind) {
  VertexMetricField field;
  field.kind = kind;
  field.metrics.assign(static_cast<std::size_t>(mesh.num_vertices()), SymMat2{0.0, 0.0, 0.0});
  std::vector<double> weight(static_cast<std::size_t>(mesh.num_vertices()), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    for (int id : mesh.triangles[ts].v) {
      field.metrics[static_cast<std::size_t>(id)] += areas[ts] * element_metric[ts];
      weight[static_cast<std::size_t>(id)] += areas[ts];
    }
  }
  for (std::size_t v = 0; v < field.metrics.size(); ++v) {
    if (weight[v] > 0.0) field.metrics[v] *= 1.0 / weight[v];
    field.metrics[v] = clamp_spd(field.metrics[v], kMetricEigenFloor, &field.clamp_events);
  }
  return field;
}

std::vector<SymMat2> element_diffusions(const ProblemData& problem, const Mesh& mesh,
                                        const QuadratureRule& rule) {
  std::vector<SymMat2> out(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    out[static_cast<std::size_t>(t)] = element_diffusion(problem, mesh.element(t), rule);
  }
  return out;
}

std::array<SymMat2, 3> vertex_samples(const Mesh& mesh, const HessianField& h, int t) {
  const auto& v = mesh.triangles[static_cast<std::size_t>(t)].v;
  return {h.hessians[static_cast<std::size_t>(v[0])], h.hessians[static_cast<std::size_t>(v[1])],
          h.hessians[static_cast<std::size_t>(v[2])]};
}

}  // namespace

VertexMetricField metric_unif(const Mesh& mesh) {
  VertexMetricField field;
  field.kind = MetricKind::unif;
  field.metrics.assign(static_cast<std::size_t>(mesh.num_vertices()), SymMat2::identity());
  return field;
}

VertexMetricField metric_dmp(const ProblemData& problem, const Mesh& mesh, const QuadratureRule& rule) {
  const auto d = element_diffusions(problem, mesh, rule);
  std::vector<SymMat2> element_metric(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) element_metric[t] = d[t].inverse();
  return average_to_vertices(mesh, element_metric, element_areas(mesh), MetricKind::dmp);
}

std::vector<double> element_bk(const Mesh& mesh, const ProblemData& problem,
                               const HessianField& hessians, const QuadratureRule& rule) {
  std::vector<double> b(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const SymMat2 d_k = element_diffusion(problem, mesh.element(t), rule);
    const auto samples = vertex_samples(mesh, hessians, t);
    b[static_cast<std::size_t>(t)] = compute_BK(d_k, samples);
  }
  return b;
}

std::pair<VertexMetricField, RegularizationState> metric_dmp_adap(const ProblemData& problem,
                                                                  const Mesh& mesh,
                                                                  const std::vector<double>& u,
                                                                  const QuadratureRule& rule) {
  const HessianField hess = recover_hessian(mesh, u);
  const auto d = element_diffusions(problem, mesh, rule);
  const auto areas = element_areas(mesh);
  std::vector<double> b(d.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto samples = vertex_samples(mesh, hess, t);
    b[static_cast<std::size_t>(t)] = compute_BK(d[static_cast<std::size_t>(t)], samples);
  }

  RegularizationState state;
  state.domain_area = std::accumulate(areas.begin(), areas.end(), 0.0);
  const AlphaResult alpha = compute_alpha_h(b, areas, state.domain_area);
  state.alpha_h = alpha.alpha_h;
  state.degenerate = alpha.degenerate;

  std::vector<SymMat2> element_metric(d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    const double rho = alpha.degenerate ? 1.0 : std::sqrt(1.0 + b[t] / alpha.alpha_h);
    const double theta = rho * std::sqrt(d[t].det());
    element_metric[t] = theta * d[t].inverse();
    state.sigma_h += rho * areas[t];
  }
  return {average_to_vertices(mesh, element_metric, areas, MetricKind::dmp_adap), state};
}

namespace {

/// rho for the Hessian-based metric in 2D:
/// ||I + |H|/a||_F^{1/2} det(I + |H|/a)^{1/4}
double adap_density(const SymMat2& abs_h, double alpha) {
  const SymMat2 m = SymMat2::identity() + (1.0 / alpha) * abs_h;
  return std::sqrt(m.frobenius_norm()) * std::pow(m.det(), 0.25);
}

}  // namespace

std::pair<VertexMetricField, RegularizationState> metric_adap(const Mesh& mesh,
                                                              const std::vector<double>& u) {
  const HessianField hess = recover_hessian(mesh, u);
  const auto areas = element_areas(mesh);
  RegularizationState state;
  state.domain_area = std::accumulate(areas.begin(), areas.end(), 0.0);

  std::vector<SymMat2> vertex_abs(hess.hessians.size());
  double h_max = 0.0;
  for (std::size_t v = 0; v < vertex_abs.size(); ++v) {
    vertex_abs[v] = abs_tensor(hess.hessians[v]);
    h_max = std::max(h_max, vertex_abs[v].spectral_norm());
  }
  std::vector<SymMat2> element_abs(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    SymMat2 s{0.0, 0.0, 0.0};
    for (int id : mesh.triangles[static_cast<std::size_t>(t)].v) s += vertex_abs[static_cast<std::size_t>(id)];
    element_abs[static_cast<std::size_t>(t)] = (1.0 / 3.0) * s;
  }

  if (!(h_max > 0.0)) {
    state.degenerate = true;
    state.sigma_h = state.domain_area;
    VertexMetricField field = metric_unif(mesh);
    field.kind = MetricKind::adap;
    return {field, state};
  }

  const double budget = 2.0 * state.domain_area;
  const auto excess = [&](double alpha) {
    double s = 0.0;
    for (std::size_t t = 0; t < element_abs.size(); ++t) s += areas[t] * adap_density(element_abs[t], alpha);
    return s - budget;
  };

  double lo = 1e-12;
  double hi = h_max + 1.0;
  if (excess(lo) <= 0.0) {
    throw BisectionFailure("budget equation has no root: density too small even for alpha = 1e-12");
  }
  for (int k = 0; k < 200 && excess(hi) > 0.0; ++k) hi *= 2.0;
  if (excess(hi) > 0.0) throw BisectionFailure("budget equation has no root in bracket");
  // geometric bisection; keep the upper end so the budget is respected
  while ((hi - lo) > 1e-3 * hi) {
    const double mid = std::sqrt(lo * hi) > lo && std::sqrt(lo * hi) < hi ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  state.alpha_h = hi;
  state.sigma_h = excess(hi) + budget;

  VertexMetricField field;
  field.kind = MetricKind::adap;
  field.metrics.resize(vertex_abs.size());
  for (std::size_t v = 0; v < vertex_abs.size(); ++v) {
    const SymMat2 m = SymMat2::identity() + (1.0 / hi) * vertex_abs[v];
    const double rho = adap_density(vertex_abs[v], hi);
    field.metrics[v] = clamp_spd((rho / std::sqrt(m.det())) * m, kMetricEigenFloor, &field.clamp_events);
  }
  return {field, state};
}

double sigma_h(const Mesh& mesh, const VertexMetricField& field) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    SymMat2 m{0.0, 0.0, 0.0};
    for (int id : mesh.triangles[static_cast<std::size_t>(t)].v) m += field.metrics[static_cast<std::size_t>(id)];
    m *= 1.0 / 3.0;
    s += std::sqrt(std::max(0.0, m.det())) * mesh.signed_area(t);
  }
  return s;
}

double error_bound_factor(const Mesh& mesh, const ProblemData& problem, const HessianField& hessians,
                          const QuadratureRule& rule) {
  const auto b = element_bk(mesh, problem, hessians, rule);
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    s += mesh.signed_area(t) * std::sqrt(b[static_cast<std::size_t>(t)]);
  }
  return s;
}

TraceBounds trace_bounds(const Mat2& a, const SymMat2& s) {
  TraceBounds out;
  const double t_sas = (a.transpose() * s.matrix() * a).trace();
  const double t_aa = (a.transpose() * a).trace();
  const double s_norm = s.spectral_norm();
  out.abs_trace = std::abs(t_sas);
  out.trace_norm = t_aa * s_norm;
  out.spd = s.is_spd();
  if (out.spd) {
    out.spd_lower = t_sas / s_norm;
    out.spd_middle = t_aa;
    out.spd_upper = t_sas * s.inverse().spectral_norm();
  }
  return out;
}

std::string save_metric(const VertexMetricField& field) {
  std::string out = "metric " + std::to_string(field.metrics.size()) + "\n";
  char buf[96];
  for (const auto& m : field.metrics) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", m.a11, m.a12, m.a22);
    out += buf;
  }
  return out;
}

VertexMetricField load_metric(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  VertexMetricField field;
  long expected = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (expected < 0) {
      std::string key;
      if (!(ls >> key)) continue;
      if (key != "metric" || !(ls >> expected) || expected < 0) {
        throw ParseError(line_no, "expected 'metric N'");
      }
      continue;
    }
    SymMat2 m;
    if (!(ls >> m.a11)) continue;
    if (!(ls >> m.a12 >> m.a22)) throw ParseError(line_no, "metric line needs 'm11 m12 m22'");
    field.metrics.push_back(m);
  }
  if (expected < 0) throw ParseError(line_no, "missing 'metric N' header");
  if (static_cast<long>(field.metrics.size()) != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) + " metric lines, found " +
                                  std::to_string(field.metrics.size()));
  }
  return field;
}

}  // namespace anidmp
