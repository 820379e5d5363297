#pragma once

#include "anidmp/mesh.hpp"
#include "anidmp/sym_mat2.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace anidmp::fixtures {

// (0,0) (1,0) (1,1) (0,1), split along (0,0)-(1,1)
inline Mesh two_triangle_square() {
  Mesh m;
  m.points = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  m.markers = {1, 1, 1, 1};
  m.triangles = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
  return m;
}

// Unit square grid with interior vertices jittered by up to `jitter` cells.
inline Mesh jittered_square(int n, double jitter, std::mt19937_64& rng) {
  Mesh m = builtin_domain("unit_square", n);
  std::uniform_real_distribution<double> d(-jitter / n, jitter / n);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.markers[v] != 0) continue;
    m.points[v] += Point2{d(rng), d(rng)};
  }
  return m;
}

inline SymMat2 random_spd(std::mt19937_64& rng, double max_ratio = 1000.0) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> logr(0.0, std::log(max_ratio));
  std::uniform_real_distribution<double> logs(-1.0, 1.0);
  const double k2 = std::exp(logs(rng));
  return SymMat2::from_eigen(k2 * std::exp(logr(rng)), k2, angle(rng));
}

}  // namespace anidmp::fixtures
