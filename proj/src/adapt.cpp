#include "anidmp/adapt.hpp"

#include "anidmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <utility>

namespace anidmp {

double metric_edge_length(const Point2& p, const Point2& q, const SymMat2& mp, const SymMat2& mq) {
  const Vec2 e = q - p;
  return std::sqrt(std::max(0.0, 0.5 * (mp.quadratic(e) + mq.quadratic(e))));
}

double quality_alignment(const ElementGeometry& tri, const SymMat2& m) {
  const Mat2 f = reference_jacobian_equilateral(tri);
  const Mat2 j = f.transpose() * m.matrix() * f;
  const double det = j.determinant();
  if (!(det > 0.0)) throw DegenerateElement("alignment quality of a degenerate element");
  return 0.5 * j.trace() / std::sqrt(det);
}

namespace {

SymMat2 element_metric(const Mesh& mesh, const VertexMetricField& field, int t) {
  SymMat2 m{0.0, 0.0, 0.0};
  for (int id : mesh.triangles[static_cast<std::size_t>(t)].v) m += field.metrics[static_cast<std::size_t>(id)];
  return (1.0 / 3.0) * m;
}

int length_bin(double len) {
  int bin = 0;
  while (bin < static_cast<int>(kLengthBinEdges.size()) && len > kLengthBinEdges[static_cast<std::size_t>(bin)]) {
    ++bin;
  }
  return bin;
}

}  // namespace

double quality_equidistribution(const Mesh& mesh, const VertexMetricField& field) {
  std::vector<double> mass(mesh.triangles.size());
  double sigma = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double rho = std::sqrt(std::max(0.0, element_metric(mesh, field, t).det()));
    mass[static_cast<std::size_t>(t)] = rho * mesh.signed_area(t);
    sigma += mass[static_cast<std::size_t>(t)];
  }
  if (!(sigma > 0.0)) return 1.0;
  const double worst = *std::max_element(mass.begin(), mass.end());
  return worst * static_cast<double>(mesh.num_triangles()) / sigma;
}

QualityReport quality_report(const Mesh& mesh, const VertexMetricField& field) {
  QualityReport r;
  r.element_count = mesh.num_triangles();
  if (r.element_count == 0) return r;
  double sum = 0.0;
  r.q_ali_max = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double q = quality_alignment(mesh.element(t), element_metric(mesh, field, t));
    sum += q;
    r.q_ali_max = std::max(r.q_ali_max, q);
  }
  r.q_ali_mean = sum / r.element_count;
  r.q_eq_max = quality_equidistribution(mesh, field);
  const Connectivity conn = build_connectivity(mesh);
  for (const auto& e : conn.edges) {
    const auto a = static_cast<std::size_t>(e.a);
    const auto b = static_cast<std::size_t>(e.b);
    const double len = metric_edge_length(mesh.points[a], mesh.points[b], field.metrics[a], field.metrics[b]);
    ++r.length_histogram[static_cast<std::size_t>(length_bin(len))];
  }
  return r;
}

VertexMetricField scale_metric_for_target(const VertexMetricField& field, const Mesh& mesh,
                                          int target_elements) {
  const double sigma = sigma_h(mesh, field);
  if (!(sigma > 0.0)) throw Error("metric field has zero total density");
  const double s = target_elements * (std::sqrt(3.0) / 4.0) / sigma;
  VertexMetricField out = field;
  for (auto& m : out.metrics) m *= s;
  return out;
}

// ---------------------------------------------------------------------------
// background interpolation

MetricInterpolator::MetricInterpolator(const Mesh& mesh, const VertexMetricField& field)
    : mesh_(&mesh), field_(&field) {
  if (mesh.points.empty() || mesh.triangles.empty()) return;
  double x1 = mesh.points[0].x(), y1 = mesh.points[0].y();
  x0_ = x1;
  y0_ = y1;
  for (const auto& p : mesh.points) {
    x0_ = std::min(x0_, p.x());
    y0_ = std::min(y0_, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  const double w = std::max(x1 - x0_, 1e-300);
  const double h = std::max(y1 - y0_, 1e-300);
  cell_ = std::sqrt(w * h / std::max(1.0, 0.5 * mesh.num_triangles()));
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[static_cast<std::size_t>(t)].v;
    double bx0 = mesh.points[v[0]].x(), bx1 = bx0, by0 = mesh.points[v[0]].y(), by1 = by0;
    for (int k = 1; k < 3; ++k) {
      bx0 = std::min(bx0, mesh.points[v[k]].x());
      bx1 = std::max(bx1, mesh.points[v[k]].x());
      by0 = std::min(by0, mesh.points[v[k]].y());
      by1 = std::max(by1, mesh.points[v[k]].y());
    }
    int i0 = 0, j0 = 0, i1 = 0, j1 = 0;
    cell_of(bx0, by0, i0, j0);
    cell_of(bx1, by1, i1, j1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(t);
    }
  }
}

void MetricInterpolator::cell_of(double x, double y, int& ix, int& iy) const {
  ix = std::clamp(static_cast<int>(std::floor((x - x0_) / cell_)), 0, nx_ - 1);
  iy = std::clamp(static_cast<int>(std::floor((y - y0_) / cell_)), 0, ny_ - 1);
}

SymMat2 MetricInterpolator::operator()(const Point2& p, int* clamp_events) const {
  const Mesh& mesh = *mesh_;
  int ix = 0, iy = 0;
  cell_of(p.x(), p.y(), ix, iy);
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<double, 3> best_bary{};
  const auto test = [&](int t) {
    const auto& v = mesh.triangles[static_cast<std::size_t>(t)].v;
    const Point2& a = mesh.points[v[0]];
    const Point2& b = mesh.points[v[1]];
    const Point2& c = mesh.points[v[2]];
    const double area = signed_area(a, b, c);
    const std::array<double, 3> bary{signed_area(p, b, c) / area, signed_area(a, p, c) / area,
                                     signed_area(a, b, p) / area};
    const double m = std::min({bary[0], bary[1], bary[2]});
    if (m > best_min) {
      best_min = m;
      best = t;
      best_bary = bary;
    }
  };
  const int max_ring = std::max(nx_, ny_);
  for (int ring = 0; ring <= max_ring && best_min < -1e-12; ++ring) {
    for (int j = iy - ring; j <= iy + ring; ++j) {
      for (int i = ix - ring; i <= ix + ring; ++i) {
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
        if (std::max(std::abs(i - ix), std::abs(j - iy)) != ring) continue;
        for (int t : buckets_[static_cast<std::size_t>(j * nx_ + i)]) test(t);
      }
    }
    // a point outside the mesh: settle for the best candidate nearby
    if (best >= 0 && ring >= 2) break;
  }
  if (best < 0) return SymMat2::identity();
  double total = 0.0;
  for (double& b : best_bary) {
    b = std::max(0.0, b);
    total += b;
  }
  SymMat2 m{0.0, 0.0, 0.0};
  const auto& v = mesh.triangles[static_cast<std::size_t>(best)].v;
  for (int k = 0; k < 3; ++k) m += (best_bary[static_cast<std::size_t>(k)] / total) * field_->metrics[static_cast<std::size_t>(v[k])];
  return clamp_spd(m, kMetricEigenFloor, clamp_events);
}

// ---------------------------------------------------------------------------
// remesher

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

enum class VertexKind { free, slide, fixed };

struct Feature {
  int marker = 0;
  bool constrained = false;
};

struct EdgeRecord {
  int a = 0, b = 0, t0 = -1, t1 = -1;
};

class Remesher {
public:
  Remesher(const Mesh& mesh, const VertexMetricField& field, const AdaptOptions& options)
      : background_(mesh), options_(options), interp_(background_, field) {
    pts_ = mesh.points;
    marker_ = mesh.markers;
    metric_ = field.metrics;
    vertex_alive_.assign(pts_.size(), 1);
    vtris_.resize(pts_.size());
    for (const auto& t : mesh.triangles) add_triangle(t.v, t.region);

    for (const auto& c : mesh.constrained_edges) features_[key(c[0], c[1])] = {kInterfaceMarker, true};
    for (const auto& e : collect_edges()) {
      if (e.t1 >= 0) continue;
      auto& f = features_[key(e.a, e.b)];
      f.marker = marker_[static_cast<std::size_t>(e.a)] == kInnerBoundaryMarker ||
                         marker_[static_cast<std::size_t>(e.b)] == kInnerBoundaryMarker
                     ? kInnerBoundaryMarker
                     : kOuterBoundaryMarker;
    }
    for (auto& [k, f] : features_) {
      if (f.constrained) {
        const bool on_boundary = is_boundary_edge(k.first, k.second);
        if (!on_boundary) f.marker = kInterfaceMarker;
      }
    }
    classify_vertices();
  }

  int run() {
    int sweep = 0;
    for (; sweep < options_.max_sweeps; ++sweep) {
      int changes = split_pass();
      changes += collapse_pass();
      changes += flip_pass();
      changes += smooth_pass();
      if (changes == 0) {
        ++sweep;
        break;
      }
    }
    flip_pass();
    return sweep;
  }

  [[nodiscard]] int element_count() const {
    return static_cast<int>(std::count(tri_alive_.begin(), tri_alive_.end(), 1));
  }

  /// Multiplies the metric everywhere by f.
  void rescale(double f) {
    metric_scale_ *= f;
    for (auto& m : metric_) m *= f;
  }

  [[nodiscard]] std::pair<Mesh, VertexMetricField> result() const {
    Mesh mesh;
    VertexMetricField field;
    std::vector<int> remap(pts_.size(), -1);
    for (std::size_t v = 0; v < pts_.size(); ++v) {
      if (!vertex_alive_[v] || vtris_[v].empty()) continue;
      remap[v] = mesh.num_vertices();
      mesh.points.push_back(pts_[v]);
      mesh.markers.push_back(marker_[v]);
      field.metrics.push_back(metric_[v]);
    }
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tri_alive_[t]) continue;
      Triangle tri;
      tri.region = region_[t];
      for (int k = 0; k < 3; ++k) tri.v[static_cast<std::size_t>(k)] = remap[static_cast<std::size_t>(tris_[t][static_cast<std::size_t>(k)])];
      mesh.triangles.push_back(tri);
    }
    for (const auto& [k, f] : features_) {
      if (!f.constrained) continue;
      mesh.constrained_edges.push_back({remap[static_cast<std::size_t>(k.first)], remap[static_cast<std::size_t>(k.second)]});
    }
    std::sort(mesh.constrained_edges.begin(), mesh.constrained_edges.end());
    field.clamp_events = clamp_events_;
    return {std::move(mesh), std::move(field)};
  }

private:
  // --- storage helpers ----------------------------------------------------

  int add_triangle(const std::array<int, 3>& v, int region) {
    const int id = static_cast<int>(tris_.size());
    tris_.push_back(v);
    region_.push_back(region);
    tri_alive_.push_back(1);
    for (int x : v) vtris_[static_cast<std::size_t>(x)].push_back(id);
    return id;
  }

  void kill_triangle(int t) {
    tri_alive_[static_cast<std::size_t>(t)] = 0;
    for (int x : tris_[static_cast<std::size_t>(t)]) {
      auto& list = vtris_[static_cast<std::size_t>(x)];
      list.erase(std::remove(list.begin(), list.end(), t), list.end());
    }
  }

  int add_vertex(const Point2& p, int marker, VertexKind kind) {
    pts_.push_back(p);
    marker_.push_back(marker);
    metric_.push_back(metric_scale_ * interp_(p, &clamp_events_));
    vertex_alive_.push_back(1);
    vtris_.emplace_back();
    kind_.push_back(kind);
    locked_.push_back(0);
    return static_cast<int>(pts_.size()) - 1;
  }

  [[nodiscard]] double length(int a, int b) const {
    const auto sa = static_cast<std::size_t>(a);
    const auto sb = static_cast<std::size_t>(b);
    return metric_edge_length(pts_[sa], pts_[sb], metric_[sa], metric_[sb]);
  }

  [[nodiscard]] std::vector<EdgeRecord> collect_edges() const {
    struct Half {
      int a, b, t;
    };
    std::vector<Half> halves;
    halves.reserve(3 * tris_.size());
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tri_alive_[t]) continue;
      for (int k = 0; k < 3; ++k) {
        const auto [a, b] = key(tris_[t][static_cast<std::size_t>(k)], tris_[t][static_cast<std::size_t>((k + 1) % 3)]);
        halves.push_back({a, b, static_cast<int>(t)});
      }
    }
    std::sort(halves.begin(), halves.end(), [](const Half& x, const Half& y) {
      return std::tie(x.a, x.b, x.t) < std::tie(y.a, y.b, y.t);
    });
    std::vector<EdgeRecord> edges;
    for (std::size_t i = 0; i < halves.size();) {
      EdgeRecord e{halves[i].a, halves[i].b, halves[i].t, -1};
      std::size_t j = i + 1;
      if (j < halves.size() && halves[j].a == e.a && halves[j].b == e.b) {
        e.t1 = halves[j].t;
        ++j;
      }
      while (j < halves.size() && halves[j].a == e.a && halves[j].b == e.b) ++j;
      edges.push_back(e);
      i = j;
    }
    return edges;
  }

  [[nodiscard]] std::vector<int> triangles_of_edge(int a, int b) const {
    std::vector<int> out;
    for (int t : vtris_[static_cast<std::size_t>(a)]) {
      const auto& v = tris_[static_cast<std::size_t>(t)];
      if (v[0] == b || v[1] == b || v[2] == b) out.push_back(t);
    }
    return out;
  }

  [[nodiscard]] bool is_boundary_edge(int a, int b) const { return triangles_of_edge(a, b).size() == 1; }

  [[nodiscard]] std::vector<int> neighbors(int v) const {
    std::vector<int> out;
    for (int t : vtris_[static_cast<std::size_t>(v)]) {
      for (int x : tris_[static_cast<std::size_t>(t)]) {
        if (x != v) out.push_back(x);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  [[nodiscard]] std::vector<int> feature_neighbors(int v) const {
    std::vector<int> out;
    for (int x : neighbors(v)) {
      if (features_.count(key(v, x))) out.push_back(x);
    }
    return out;
  }

  void classify_vertices() {
    kind_.assign(pts_.size(), VertexKind::free);
    locked_.assign(pts_.size(), 0);
    for (std::size_t v = 0; v < pts_.size(); ++v) {
      const auto fn = feature_neighbors(static_cast<int>(v));
      if (fn.empty()) continue;
      kind_[v] = VertexKind::fixed;
      if (fn.size() != 2) continue;
      const Vec2 e1 = pts_[static_cast<std::size_t>(fn[0])] - pts_[v];
      const Vec2 e2 = pts_[static_cast<std::size_t>(fn[1])] - pts_[v];
      const double cross = e1.x() * e2.y() - e1.y() * e2.x();
      const auto f1 = features_.at(key(static_cast<int>(v), fn[0]));
      const auto f2 = features_.at(key(static_cast<int>(v), fn[1]));
      if (std::abs(cross) <= 1e-12 * e1.norm() * e2.norm() && e1.dot(e2) < 0.0 &&
          f1.constrained == f2.constrained && f1.marker == f2.marker) {
        kind_[v] = VertexKind::slide;
      }
    }
  }

  [[nodiscard]] bool positive(const Point2& a, const Point2& b, const Point2& c) const {
    const double l2 = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    return signed_area(a, b, c) > 1e-10 * l2;
  }

  // --- split --------------------------------------------------------------

  int split_pass() {
    auto edges = collect_edges();
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const double len = length(edges[i].a, edges[i].b);
      if (len > options_.split_threshold) order.emplace_back(-len, i);
    }
    std::sort(order.begin(), order.end());
    int count = 0;
    for (const auto& [neg_len, i] : order) {
      const auto& e = edges[i];
      if (!tri_alive_[static_cast<std::size_t>(e.t0)] || (e.t1 >= 0 && !tri_alive_[static_cast<std::size_t>(e.t1)])) continue;
      split_edge(e.a, e.b);
      ++count;
    }
    return count;
  }

  void split_edge(int a, int b) {
    const auto sa = static_cast<std::size_t>(a);
    const auto sb = static_cast<std::size_t>(b);
    const Vec2 e = pts_[sb] - pts_[sa];
    const double la = std::sqrt(metric_[sa].quadratic(e));
    const double lb = std::sqrt(metric_[sb].quadratic(e));
    // metric midpoint with density varying linearly along the edge
    double t = 0.5;
    if (std::abs(lb - la) > 1e-12 * (la + lb)) {
      const double total = 0.5 * (la + lb);
      t = (-la + std::sqrt(la * la + (lb - la) * total)) / (lb - la);
      t = std::clamp(t, 0.25, 0.75);
    }
    const Point2 p = pts_[sa] + t * e;

    const auto fit = features_.find(key(a, b));
    int m = 0;
    if (fit != features_.end()) {
      const Feature f = fit->second;
      features_.erase(fit);
      m = add_vertex(p, f.marker, VertexKind::slide);
      features_[key(a, m)] = f;
      features_[key(m, b)] = f;
    } else {
      m = add_vertex(p, kInteriorMarker, VertexKind::free);
    }
    for (int t_id : triangles_of_edge(a, b)) {
      const auto v = tris_[static_cast<std::size_t>(t_id)];
      const int region = region_[static_cast<std::size_t>(t_id)];
      kill_triangle(t_id);
      auto first = v;
      auto second = v;
      for (int k = 0; k < 3; ++k) {
        if (v[static_cast<std::size_t>(k)] == b) first[static_cast<std::size_t>(k)] = m;
        if (v[static_cast<std::size_t>(k)] == a) second[static_cast<std::size_t>(k)] = m;
      }
      add_triangle(first, region);
      add_triangle(second, region);
    }
  }

  // --- collapse -----------------------------------------------------------

  int collapse_pass() {
    auto edges = collect_edges();
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const double len = length(edges[i].a, edges[i].b);
      if (len < options_.collapse_threshold) order.emplace_back(len, i);
    }
    std::sort(order.begin(), order.end());
    std::fill(locked_.begin(), locked_.end(), 0);
    int count = 0;
    for (const auto& [len, i] : order) {
      const int a = edges[i].a;
      const int b = edges[i].b;
      if (!vertex_alive_[static_cast<std::size_t>(a)] || !vertex_alive_[static_cast<std::size_t>(b)]) continue;
      if (locked_[static_cast<std::size_t>(a)] || locked_[static_cast<std::size_t>(b)]) continue;
      if (triangles_of_edge(a, b).empty()) continue;
      if (try_collapse(a, b) || try_collapse(b, a)) ++count;
    }
    return count;
  }

  /// Removes v by merging it into w.
  bool try_collapse(int v, int w) {
    const auto sv = static_cast<std::size_t>(v);
    const auto sw = static_cast<std::size_t>(w);
    const bool along_feature = features_.count(key(v, w)) != 0;
    if (kind_[sv] == VertexKind::fixed) return false;
    if (kind_[sv] == VertexKind::slide && !along_feature) return false;
    if (kind_[sv] == VertexKind::free && along_feature) return false;

    const auto shared = triangles_of_edge(v, w);
    std::vector<int> opposite;
    for (int t : shared) {
      for (int x : tris_[static_cast<std::size_t>(t)]) {
        if (x != v && x != w) opposite.push_back(x);
      }
    }
    std::sort(opposite.begin(), opposite.end());
    const auto nv = neighbors(v);
    const auto nw = neighbors(w);
    std::vector<int> common;
    std::set_intersection(nv.begin(), nv.end(), nw.begin(), nw.end(), std::back_inserter(common));
    if (common != opposite) return false;

    for (int t : vtris_[sv]) {
      if (std::find(shared.begin(), shared.end(), t) != shared.end()) continue;
      auto tri = tris_[static_cast<std::size_t>(t)];
      for (int& x : tri) {
        if (x == v) x = w;
      }
      if (!positive(pts_[static_cast<std::size_t>(tri[0])], pts_[static_cast<std::size_t>(tri[1])],
                    pts_[static_cast<std::size_t>(tri[2])])) {
        return false;
      }
    }
    for (int x : nv) {
      if (x == w || std::binary_search(nw.begin(), nw.end(), x)) continue;
      if (length(w, x) > options_.split_threshold) return false;
    }

    // apply
    for (int t : shared) kill_triangle(t);
    const auto star = vtris_[sv];
    for (int t : star) {
      auto tri = tris_[static_cast<std::size_t>(t)];
      const int region = region_[static_cast<std::size_t>(t)];
      kill_triangle(t);
      for (int& x : tri) {
        if (x == v) x = w;
      }
      add_triangle(tri, region);
    }
    if (along_feature) {
      const Feature f = features_.at(key(v, w));
      features_.erase(key(v, w));
      for (int x : nv) {
        const auto it = features_.find(key(v, x));
        if (it == features_.end()) continue;
        const Feature g = it->second;
        features_.erase(it);
        features_[key(w, x)] = g;
      }
      (void)f;
    }
    vertex_alive_[sv] = 0;
    locked_[sw] = 1;
    for (int x : nv) locked_[static_cast<std::size_t>(x)] = 1;
    return true;
  }

  // --- flip ---------------------------------------------------------------

  /// Cotangent of the angle at c in triangle (a, b, c) measured in m.
  static double metric_cot(const Point2& a, const Point2& b, const Point2& c, const SymMat2& m) {
    const Vec2 u = a - c;
    const Vec2 w = b - c;
    const double cross = std::abs(u.x() * w.y() - u.y() * w.x()) * std::sqrt(m.det());
    return m.bilinear(u, w) / cross;
  }

  [[nodiscard]] SymMat2 mean_metric(std::initializer_list<int> ids) const {
    SymMat2 m{0.0, 0.0, 0.0};
    for (int id : ids) m += metric_[static_cast<std::size_t>(id)];
    return (1.0 / static_cast<double>(ids.size())) * m;
  }

  [[nodiscard]] double alignment(const std::array<int, 3>& v) const {
    const auto& p = pts_;
    try {
      const ElementGeometry g = element_geometry(p[static_cast<std::size_t>(v[0])], p[static_cast<std::size_t>(v[1])],
                                                 p[static_cast<std::size_t>(v[2])]);
      return quality_alignment(g, mean_metric({v[0], v[1], v[2]}));
    } catch (const DegenerateElement&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  /// Flips edge (a, b) when the criterion asks for it; returns true on a flip.
  bool try_flip(int a, int b, int t0, int t1) {
    if (features_.count(key(a, b))) return false;
    if (region_[static_cast<std::size_t>(t0)] != region_[static_cast<std::size_t>(t1)]) return false;
    // orient so that t0 = (a, b, c) and t1 = (b, a, d) counterclockwise
    const auto rotate_to = [](std::array<int, 3> v, int first) {
      while (v[0] != first) std::rotate(v.begin(), v.begin() + 1, v.end());
      return v;
    };
    auto v0 = rotate_to(tris_[static_cast<std::size_t>(t0)], a);
    if (v0[1] != b) {
      std::swap(t0, t1);
      v0 = rotate_to(tris_[static_cast<std::size_t>(t0)], a);
    }
    const auto v1 = rotate_to(tris_[static_cast<std::size_t>(t1)], b);
    if (v0[1] != b || v1[1] != a) return false;
    const int c = v0[2];
    const int d = v1[2];
    if (c == d) return false;
    const Point2& pa = pts_[static_cast<std::size_t>(a)];
    const Point2& pb = pts_[static_cast<std::size_t>(b)];
    const Point2& pc = pts_[static_cast<std::size_t>(c)];
    const Point2& pd = pts_[static_cast<std::size_t>(d)];
    if (!positive(pa, pd, pc) || !positive(pd, pb, pc)) return false;
    // the new edge must not exist already
    const auto nc = neighbors(c);
    if (std::binary_search(nc.begin(), nc.end(), d)) return false;

    bool flip = false;
    if (options_.flip == FlipCriterion::metric_delaunay) {
      const SymMat2 m = mean_metric({a, b, c, d});
      flip = metric_cot(pa, pb, pc, m) + metric_cot(pb, pa, pd, m) < -1e-10;
    } else {
      const double before = std::max(alignment({a, b, c}), alignment({b, a, d}));
      const double after = std::max(alignment({a, d, c}), alignment({d, b, c}));
      flip = after < before * (1.0 - 1e-10);
    }
    if (!flip) return false;
    const int region = region_[static_cast<std::size_t>(t0)];
    kill_triangle(t0);
    kill_triangle(t1);
    add_triangle({a, d, c}, region);
    add_triangle({d, b, c}, region);
    return true;
  }

  int flip_pass() {
    int total = 0;
    constexpr int kMaxRounds = 50;
    for (int round = 0; round < kMaxRounds; ++round) {
      int flips = 0;
      for (const auto& e : collect_edges()) {
        if (e.t1 < 0) continue;
        if (!tri_alive_[static_cast<std::size_t>(e.t0)] || !tri_alive_[static_cast<std::size_t>(e.t1)]) continue;
        if (try_flip(e.a, e.b, e.t0, e.t1)) ++flips;
      }
      total += flips;
      if (flips == 0) break;
    }
    return total;
  }

  // --- smoothing ----------------------------------------------------------

  [[nodiscard]] Point2 unit_length_point(int v, int x) const {
    const Point2& pv = pts_[static_cast<std::size_t>(v)];
    const Point2& px = pts_[static_cast<std::size_t>(x)];
    const double len = length(v, x);
    return px + (pv - px) / len;
  }

  bool move_is_valid(int v, const Point2& p) const {
    for (int t : vtris_[static_cast<std::size_t>(v)]) {
      std::array<Point2, 3> q;
      for (int k = 0; k < 3; ++k) {
        const int x = tris_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        q[static_cast<std::size_t>(k)] = x == v ? p : pts_[static_cast<std::size_t>(x)];
      }
      if (!positive(q[0], q[1], q[2])) return false;
    }
    return true;
  }

  int smooth_pass() {
    int moved = 0;
    const double omega = options_.smooth_relaxation;
    for (std::size_t sv = 0; sv < pts_.size(); ++sv) {
      if (!vertex_alive_[sv] || kind_[sv] == VertexKind::fixed || vtris_[sv].empty()) continue;
      const int v = static_cast<int>(sv);
      const Point2 x = pts_[sv];
      const auto nb = kind_[sv] == VertexKind::free ? neighbors(v) : feature_neighbors(v);
      if (nb.empty() || (kind_[sv] == VertexKind::slide && nb.size() != 2)) continue;
      Vec2 target = Vec2::Zero();
      double min_len = std::numeric_limits<double>::infinity();
      for (int n : nb) {
        target += unit_length_point(v, n);
        min_len = std::min(min_len, (pts_[static_cast<std::size_t>(n)] - x).norm());
      }
      target /= static_cast<double>(nb.size());
      Point2 p = x + omega * (target - x);
      if (kind_[sv] == VertexKind::slide) {
        // keep the vertex strictly inside its segment
        const Point2& u0 = pts_[static_cast<std::size_t>(nb[0])];
        const Point2& u1 = pts_[static_cast<std::size_t>(nb[1])];
        const Vec2 d = u1 - u0;
        const double s = std::clamp((p - u0).dot(d) / d.squaredNorm(), 0.1, 0.9);
        p = u0 + s * d;
        // exact placement on the supporting line of an axis-aligned segment
        if (u0.x() == u1.x()) p.x() = u0.x();
        if (u0.y() == u1.y()) p.y() = u0.y();
      }
      const double shift = (p - x).norm();
      if (!(shift > 1e-9 * min_len)) continue;
      if (!move_is_valid(v, p)) continue;
      pts_[sv] = p;
      metric_[sv] = metric_scale_ * interp_(p, &clamp_events_);
      if (shift > 1e-3 * min_len) ++moved;
    }
    return moved;
  }

  const Mesh& background_;
  AdaptOptions options_;
  MetricInterpolator interp_;

  std::vector<Point2> pts_;
  std::vector<int> marker_;
  std::vector<SymMat2> metric_;
  std::vector<char> vertex_alive_;
  std::vector<VertexKind> kind_;
  std::vector<char> locked_;
  std::vector<std::vector<int>> vtris_;

  std::vector<std::array<int, 3>> tris_;
  std::vector<int> region_;
  std::vector<char> tri_alive_;

  std::map<EdgeKey, Feature> features_;
  int clamp_events_ = 0;
  double metric_scale_ = 1.0;
};

}  // namespace

AdaptResult adapt_mesh(const Mesh& mesh, const VertexMetricField& field, const AdaptOptions& options) {
  if (options.target_elements < 4) throw Error("target_elements must be at least 4");
  if (field.metrics.size() != mesh.points.size()) {
    throw Error("metric field size does not match the mesh");
  }
  const VertexMetricField scaled = scale_metric_for_target(field, mesh, options.target_elements);
  Remesher remesher(mesh, scaled, options);
  AdaptResult out;
  out.sweeps = remesher.run();
  // unit edge lengths inside the split/collapse band do not pin the count
  // exactly; correct the density and keep sweeping
  constexpr int kCountCorrections = 2;
  for (int k = 0; k < kCountCorrections; ++k) {
    const double ratio = static_cast<double>(options.target_elements) / remesher.element_count();
    if (std::abs(ratio - 1.0) <= 0.05) break;
    remesher.rescale(ratio);
    out.sweeps += remesher.run();
  }
  auto [result_mesh, result_field] = remesher.result();
  result_field.kind = field.kind;
  result_field.clamp_events += field.clamp_events;
  out.mesh = std::move(result_mesh);
  out.field = std::move(result_field);
  const double n = out.mesh.num_triangles();
  out.stalled = std::abs(n - options.target_elements) > 0.5 * options.target_elements;
  out.quality = quality_report(out.mesh, out.field);
  return out;
}

}  // namespace anidmp
