#pragma once

#include "anidmp/geometry.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace anidmp {

inline constexpr int kInteriorMarker = 0;
inline constexpr int kOuterBoundaryMarker = 1;
inline constexpr int kInnerBoundaryMarker = 2;
/// Vertices on a material interface. These remain free unknowns.
inline constexpr int kInterfaceMarker = 3;

struct Triangle {
  std::array<int, 3> v{};
  int region = 0;

  friend bool operator==(const Triangle&, const Triangle&) = default;
};

/// Conforming triangulation. Vertex ids are indices into `points`.
struct Mesh {
  std::vector<Point2> points;
  std::vector<int> markers;
  std::vector<Triangle> triangles;
  /// Vertex pairs that remeshing must keep as edges.
  std::vector<std::array<int, 2>> constrained_edges;

  [[nodiscard]] int num_vertices() const { return static_cast<int>(points.size()); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles.size()); }

  [[nodiscard]] ElementGeometry element(int t) const {
    const auto& v = triangles[static_cast<std::size_t>(t)].v;
    return element_geometry(points[v[0]], points[v[1]], points[v[2]]);
  }

  [[nodiscard]] double signed_area(int t) const;
  /// Sum of (signed) triangle areas.
  [[nodiscard]] double area() const;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Undirected edge with up to two incident triangles (t1 = -1 on the boundary).
struct MeshEdge {
  int a = 0;  ///< smaller vertex id
  int b = 0;
  int t0 = -1;
  int t1 = -1;
  [[nodiscard]] bool is_boundary() const { return t1 < 0; }
};

/// Read-only adjacency derived from a mesh.
struct Connectivity {
  std::vector<MeshEdge> edges;  ///< sorted by (a, b)
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::vector<int>> vertex_neighbors;  ///< sorted ids
  std::vector<char> on_boundary;
  /// Number of edges carried by more than two triangles.
  int nonmanifold_edges = 0;

  /// Index into `edges`, or -1.
  [[nodiscard]] int find_edge(int u, int v) const;
};

Connectivity build_connectivity(const Mesh& mesh);

/// Triangles incident to one vertex.
struct VertexPatch {
  int vertex = 0;
  std::vector<int> triangles;
};

VertexPatch vertex_patch(const Connectivity& conn, int vertex);

struct Violation {
  std::string rule;
  std::string entity;
};

/// Every broken mesh invariant; empty for a valid mesh. Never throws.
std::vector<Violation> validate(const Mesh& mesh);

/// Number of closed boundary loops (outer plus holes).
int count_boundary_loops(const Mesh& mesh);

Mesh load_mesh(std::string_view text);
std::string save_mesh(const Mesh& mesh);

/// Structured initial meshes for the benchmark domains:
/// unit_square, square16, square_with_hole, unit_square_interface.
Mesh builtin_domain(std::string_view name, int resolution);

/// Resolution whose builtin mesh has roughly `target_elements` triangles.
int resolution_for_target(std::string_view name, int target_elements);

}  // namespace anidmp
