#include "anidmp/mesh.hpp"

#include "anidmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace anidmp {

double Mesh::signed_area(int t) const {
  const auto& v = triangles[static_cast<std::size_t>(t)].v;
  return anidmp::signed_area(points[v[0]], points[v[1]], points[v[2]]);
}

double Mesh::area() const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t) sum += signed_area(t);
  return sum;
}

int Connectivity::find_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  const auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{u, v},
                                   [](const MeshEdge& e, const std::pair<int, int>& key) {
                                     return std::pair{e.a, e.b} < key;
                                   });
  if (it == edges.end() || it->a != u || it->b != v) return -1;
  return static_cast<int>(it - edges.begin());
}

namespace {

struct HalfEdgeRecord {
  int a;
  int b;
  int tri;
  bool operator<(const HalfEdgeRecord& o) const {
    return std::tie(a, b, tri) < std::tie(o.a, o.b, o.tri);
  }
};

bool vertex_ids_valid(const Mesh& mesh, const Triangle& t) {
  for (int id : t.v) {
    if (id < 0 || id >= mesh.num_vertices()) return false;
  }
  return true;
}

}  // namespace

Connectivity build_connectivity(const Mesh& mesh) {
  Connectivity c;
  const auto nv = static_cast<std::size_t>(mesh.num_vertices());
  c.vertex_triangles.assign(nv, {});
  c.vertex_neighbors.assign(nv, {});
  c.on_boundary.assign(nv, 0);

  std::vector<HalfEdgeRecord> records;
  records.reserve(3 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    if (!vertex_ids_valid(mesh, tri)) continue;
    for (int k = 0; k < 3; ++k) {
      const int u = tri.v[k];
      const int w = tri.v[(k + 1) % 3];
      c.vertex_triangles[static_cast<std::size_t>(u)].push_back(t);
      records.push_back({std::min(u, w), std::max(u, w), t});
    }
  }
  std::sort(records.begin(), records.end());

  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    while (j < records.size() && records[j].a == records[i].a && records[j].b == records[i].b) ++j;
    MeshEdge e;
    e.a = records[i].a;
    e.b = records[i].b;
    e.t0 = records[i].tri;
    if (j - i >= 2) e.t1 = records[i + 1].tri;
    if (j - i > 2) ++c.nonmanifold_edges;
    if (j - i == 1) {
      c.on_boundary[static_cast<std::size_t>(e.a)] = 1;
      c.on_boundary[static_cast<std::size_t>(e.b)] = 1;
    }
    c.vertex_neighbors[static_cast<std::size_t>(e.a)].push_back(e.b);
    c.vertex_neighbors[static_cast<std::size_t>(e.b)].push_back(e.a);
    c.edges.push_back(e);
    i = j;
  }
  for (auto& n : c.vertex_neighbors) std::sort(n.begin(), n.end());
  return c;
}

VertexPatch vertex_patch(const Connectivity& conn, int vertex) {
  return {vertex, conn.vertex_triangles.at(static_cast<std::size_t>(vertex))};
}

std::vector<Violation> validate(const Mesh& mesh) {
  std::vector<Violation> out;
  const auto tri_name = [](int t) { return "triangle " + std::to_string(t); };

  if (mesh.markers.size() != mesh.points.size()) {
    out.push_back({"marker count", "mesh has " + std::to_string(mesh.markers.size()) +
                                       " markers for " + std::to_string(mesh.points.size()) +
                                       " vertices"});
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto& p = mesh.points[static_cast<std::size_t>(v)];
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) {
      out.push_back({"finite coordinates", "vertex " + std::to_string(v)});
    }
  }

  bool ids_ok = true;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    if (!vertex_ids_valid(mesh, tri)) {
      out.push_back({"vertex id out of range", tri_name(t)});
      ids_ok = false;
      continue;
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2]) {
      out.push_back({"repeated vertex", tri_name(t)});
      continue;
    }
    if (!(mesh.signed_area(t) > 0.0)) {
      out.push_back({"orientation", tri_name(t) + " is not counterclockwise with positive area"});
    }
  }

  const Connectivity conn = build_connectivity(mesh);
  std::vector<int> boundary_degree(static_cast<std::size_t>(mesh.num_vertices()), 0);
  for (const auto& e : conn.edges) {
    if (e.is_boundary()) {
      ++boundary_degree[static_cast<std::size_t>(e.a)];
      ++boundary_degree[static_cast<std::size_t>(e.b)];
    }
  }
  if (ids_ok) {
    // edges seen by more than two triangles
    std::vector<HalfEdgeRecord> records;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
      for (int k = 0; k < 3; ++k) {
        const int u = tri.v[k];
        const int w = tri.v[(k + 1) % 3];
        records.push_back({std::min(u, w), std::max(u, w), t});
      }
    }
    std::sort(records.begin(), records.end());
    for (std::size_t i = 0; i < records.size();) {
      std::size_t j = i;
      while (j < records.size() && records[j].a == records[i].a && records[j].b == records[i].b) ++j;
      if (j - i > 2) {
        out.push_back({"non-manifold edge", "edge (" + std::to_string(records[i].a) + "," +
                                                std::to_string(records[i].b) + ") shared by " +
                                                std::to_string(j - i) + " triangles"});
      }
      i = j;
    }
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const int deg = boundary_degree[static_cast<std::size_t>(v)];
    if (deg != 0 && deg != 2) {
      out.push_back({"open boundary loop", "vertex " + std::to_string(v) + " has " +
                                               std::to_string(deg) + " boundary edges"});
    }
  }
  for (std::size_t k = 0; k < mesh.constrained_edges.size(); ++k) {
    const auto& ce = mesh.constrained_edges[k];
    if (ce[0] < 0 || ce[1] < 0 || ce[0] >= mesh.num_vertices() || ce[1] >= mesh.num_vertices() ||
        conn.find_edge(ce[0], ce[1]) < 0) {
      out.push_back({"constrained edge missing", "constrained edge " + std::to_string(k)});
    }
  }
  return out;
}

int count_boundary_loops(const Mesh& mesh) {
  const Connectivity conn = build_connectivity(mesh);
  std::vector<std::vector<int>> next(static_cast<std::size_t>(mesh.num_vertices()));
  for (const auto& e : conn.edges) {
    if (!e.is_boundary()) continue;
    next[static_cast<std::size_t>(e.a)].push_back(e.b);
    next[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  std::vector<char> seen(static_cast<std::size_t>(mesh.num_vertices()), 0);
  int loops = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (seen[static_cast<std::size_t>(v)] || next[static_cast<std::size_t>(v)].empty()) continue;
    ++loops;
    std::vector<int> stack{v};
    seen[static_cast<std::size_t>(v)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : next[static_cast<std::size_t>(u)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return loops;
}

// ---------------------------------------------------------------------------
// text format

namespace {

struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string_view text) : in(std::string(text)) {}

  /// Next non-empty, comment-stripped line split into tokens.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      tokens.clear();
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }
};

double parse_real(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError(line, "bad real '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(line, "bad real '" + s + "'");
  }
}

long parse_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw ParseError(line, "bad integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(line, "bad integer '" + s + "'");
  }
}

std::size_t expect_header(LineReader& r, std::vector<std::string>& tok, const char* keyword) {
  if (tok.size() != 2 || tok[0] != keyword) {
    throw ParseError(r.line_no, std::string("expected '") + keyword + " N'");
  }
  const long n = parse_int(tok[1], r.line_no);
  if (n < 0) throw ParseError(r.line_no, "negative count");
  return static_cast<std::size_t>(n);
}

}  // namespace

Mesh load_mesh(std::string_view text) {
  LineReader r(text);
  std::vector<std::string> tok;
  Mesh mesh;

  if (!r.next(tok)) throw ParseError(r.line_no, "empty mesh file");
  const std::size_t nv = expect_header(r, tok, "vertices");
  mesh.points.reserve(nv);
  mesh.markers.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!r.next(tok)) throw ParseError(r.line_no, "unexpected end of vertex block");
    if (tok.size() != 3) throw ParseError(r.line_no, "vertex line needs 'x y marker'");
    mesh.points.emplace_back(parse_real(tok[0], r.line_no), parse_real(tok[1], r.line_no));
    mesh.markers.push_back(static_cast<int>(parse_int(tok[2], r.line_no)));
  }

  if (!r.next(tok)) throw ParseError(r.line_no, "missing triangles block");
  const std::size_t nt = expect_header(r, tok, "triangles");
  const auto check_id = [&](long id) {
    if (id < 0 || id >= static_cast<long>(nv)) {
      throw IndexError("line " + std::to_string(r.line_no) + ": vertex id " + std::to_string(id) +
                       " out of range [0," + std::to_string(nv) + ")");
    }
    return static_cast<int>(id);
  };
  mesh.triangles.reserve(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    if (!r.next(tok)) throw ParseError(r.line_no, "unexpected end of triangle block");
    if (tok.size() != 4) throw ParseError(r.line_no, "triangle line needs 'i j k region'");
    Triangle t;
    for (int k = 0; k < 3; ++k) t.v[k] = check_id(parse_int(tok[k], r.line_no));
    t.region = static_cast<int>(parse_int(tok[3], r.line_no));
    if (anidmp::signed_area(mesh.points[t.v[0]], mesh.points[t.v[1]], mesh.points[t.v[2]]) < 0.0) {
      std::swap(t.v[1], t.v[2]);
    }
    mesh.triangles.push_back(t);
  }

  if (r.next(tok)) {
    const std::size_t nc = expect_header(r, tok, "constrained_edges");
    for (std::size_t i = 0; i < nc; ++i) {
      if (!r.next(tok)) throw ParseError(r.line_no, "unexpected end of constrained edge block");
      if (tok.size() != 2) throw ParseError(r.line_no, "constrained edge line needs 'i j'");
      mesh.constrained_edges.push_back(
          {check_id(parse_int(tok[0], r.line_no)), check_id(parse_int(tok[1], r.line_no))});
    }
    if (r.next(tok)) throw ParseError(r.line_no, "trailing content");
  }
  return mesh;
}

std::string save_mesh(const Mesh& mesh) {
  std::string out;
  out.reserve(64 * (mesh.points.size() + mesh.triangles.size()));
  char buf[128];
  out += "vertices " + std::to_string(mesh.points.size()) + "\n";
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", mesh.points[i].x(), mesh.points[i].y(),
                  mesh.markers[i]);
    out += buf;
  }
  out += "triangles " + std::to_string(mesh.triangles.size()) + "\n";
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "%d %d %d %d\n", t.v[0], t.v[1], t.v[2], t.region);
    out += buf;
  }
  if (!mesh.constrained_edges.empty()) {
    out += "constrained_edges " + std::to_string(mesh.constrained_edges.size()) + "\n";
    for (const auto& e : mesh.constrained_edges) {
      std::snprintf(buf, sizeof buf, "%d %d\n", e[0], e[1]);
      out += buf;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// builtin domains

namespace {

std::vector<double> uniform_breaks(double lo, double hi, int cells) {
  std::vector<double> xs(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) {
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / cells;
  }
  xs.back() = hi;
  return xs;
}

/// Concatenates graded segments so that every `stops` value is a grid line.
std::vector<double> piecewise_breaks(const std::vector<double>& stops, const std::vector<int>& cells) {
  std::vector<double> xs{stops.front()};
  for (std::size_t s = 0; s + 1 < stops.size(); ++s) {
    const auto seg = uniform_breaks(stops[s], stops[s + 1], cells[s]);
    xs.insert(xs.end(), seg.begin() + 1, seg.end());
  }
  return xs;
}

struct GridSpec {
  std::vector<double> xs;
  std::vector<double> ys;
  /// Cell (i, j) removed when true.
  std::vector<char> hole;
  /// x value of a material interface or NaN.
  double interface_x = std::nan("");
};

Mesh grid_mesh(const GridSpec& g) {
  const int nx = static_cast<int>(g.xs.size()) - 1;
  const int ny = static_cast<int>(g.ys.size()) - 1;
  const auto cell_removed = [&](int i, int j) {
    return !g.hole.empty() && g.hole[static_cast<std::size_t>(j * nx + i)] != 0;
  };
  const auto node = [&](int i, int j) { return j * (nx + 1) + i; };

  Mesh raw;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      raw.points.emplace_back(g.xs[static_cast<std::size_t>(i)], g.ys[static_cast<std::size_t>(j)]);
      raw.markers.push_back(kInteriorMarker);
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (cell_removed(i, j)) continue;
      const int region =
          (!std::isnan(g.interface_x) && g.xs[static_cast<std::size_t>(i)] >= g.interface_x) ? 2 : 1;
      const int a = node(i, j), b = node(i + 1, j), c = node(i + 1, j + 1), d = node(i, j + 1);
      // diagonal from (i+1, j) to (i, j+1), across the 45-degree direction
      raw.triangles.push_back({{a, b, d}, region});
      raw.triangles.push_back({{b, c, d}, region});
    }
  }

  // drop vertices no longer used by any triangle, keep order
  std::vector<int> remap(raw.points.size(), -1);
  Mesh mesh;
  for (const auto& t : raw.triangles) {
    for (int id : t.v) remap[static_cast<std::size_t>(id)] = 0;
  }
  for (std::size_t v = 0; v < raw.points.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = mesh.num_vertices();
    mesh.points.push_back(raw.points[v]);
    mesh.markers.push_back(kInteriorMarker);
  }
  for (auto t : raw.triangles) {
    for (int& id : t.v) id = remap[static_cast<std::size_t>(id)];
    mesh.triangles.push_back(t);
  }

  const Connectivity conn = build_connectivity(mesh);
  const double x0 = g.xs.front(), x1 = g.xs.back(), y0 = g.ys.front(), y1 = g.ys.back();
  const double tol = 1e-12 * std::max(x1 - x0, y1 - y0);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!conn.on_boundary[static_cast<std::size_t>(v)]) continue;
    const auto& p = mesh.points[static_cast<std::size_t>(v)];
    const bool outer = std::abs(p.x() - x0) < tol || std::abs(p.x() - x1) < tol ||
                       std::abs(p.y() - y0) < tol || std::abs(p.y() - y1) < tol;
    mesh.markers[static_cast<std::size_t>(v)] = outer ? kOuterBoundaryMarker : kInnerBoundaryMarker;
  }
  if (!std::isnan(g.interface_x)) {
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (std::abs(mesh.points[static_cast<std::size_t>(v)].x() - g.interface_x) < tol &&
          !conn.on_boundary[static_cast<std::size_t>(v)]) {
        mesh.markers[static_cast<std::size_t>(v)] = kInterfaceMarker;
      }
    }
    for (const auto& e : conn.edges) {
      if (std::abs(mesh.points[static_cast<std::size_t>(e.a)].x() - g.interface_x) < tol &&
          std::abs(mesh.points[static_cast<std::size_t>(e.b)].x() - g.interface_x) < tol) {
        mesh.constrained_edges.push_back({e.a, e.b});
      }
    }
  }
  return mesh;
}

struct HoleSplit {
  int outer;  ///< cells on each side of the hole
  int inner;  ///< cells across the hole
};

HoleSplit hole_split(int resolution) {
  return {std::max(1, static_cast<int>(std::lround(4.0 * resolution / 9.0))),
          std::max(1, static_cast<int>(std::lround(resolution / 9.0)))};
}

GridSpec hole_grid(int resolution) {
  const auto [a, b] = hole_split(resolution);
  GridSpec g;
  const std::vector<double> stops{0.0, 4.0 / 9.0, 5.0 / 9.0, 1.0};
  g.xs = piecewise_breaks(stops, {a, b, a});
  g.ys = g.xs;
  const int n = 2 * a + b;
  g.hole.assign(static_cast<std::size_t>(n * n), 0);
  for (int j = a; j < a + b; ++j) {
    for (int i = a; i < a + b; ++i) g.hole[static_cast<std::size_t>(j * n + i)] = 1;
  }
  return g;
}

int triangle_count(std::string_view name, int resolution) {
  if (name == "square_with_hole") {
    const auto [a, b] = hole_split(resolution);
    const int n = 2 * a + b;
    return 2 * (n * n - b * b);
  }
  if (name == "unit_square_interface") {
    const int n = resolution + (resolution % 2);
    return 2 * n * n;
  }
  return 2 * resolution * resolution;
}

}  // namespace

Mesh builtin_domain(std::string_view name, int resolution) {
  if (resolution < 2) throw Error("builtin_domain: resolution must be >= 2");
  GridSpec g;
  if (name == "unit_square") {
    g.xs = uniform_breaks(0.0, 1.0, resolution);
    g.ys = g.xs;
  } else if (name == "square16") {
    g.xs = uniform_breaks(0.0, 16.0, resolution);
    g.ys = g.xs;
  } else if (name == "square_with_hole") {
    g = hole_grid(resolution);
  } else if (name == "unit_square_interface") {
    const int n = resolution + (resolution % 2);
    g.xs = piecewise_breaks({0.0, 0.5, 1.0}, {n / 2, n / 2});
    g.ys = uniform_breaks(0.0, 1.0, n);
    g.interface_x = 0.5;
  } else {
    throw UnknownDomain("unknown domain '" + std::string(name) + "'");
  }
  return grid_mesh(g);
}

int resolution_for_target(std::string_view name, int target_elements) {
  if (name != "unit_square" && name != "square16" && name != "square_with_hole" &&
      name != "unit_square_interface") {
    throw UnknownDomain("unknown domain '" + std::string(name) + "'");
  }
  int best = 2;
  long best_gap = -1;
  for (int r = 2; r <= 2000; ++r) {
    const long gap = std::labs(static_cast<long>(triangle_count(name, r)) - target_elements);
    if (best_gap < 0 || gap < best_gap) {
      best = r;
      best_gap = gap;
    }
    if (triangle_count(name, r) > 2 * target_elements + 16) break;
  }
  return best;
}

}  // namespace anidmp
