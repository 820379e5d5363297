#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace anidmp {

using Vec2 = Eigen::Vector2d;
using Point2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Eigen-decomposition of a symmetric 2x2 tensor. Eigenvalues ascending,
/// eigenvectors unit length and stored in matching order.
struct SymEigen2 {
  std::array<double, 2> values;
  std::array<Vec2, 2> vectors;
};

/// Symmetric 2x2 tensor stored as its three independent entries. Used for
/// diffusion matrices, metrics and Hessians alike.
struct SymMat2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  static SymMat2 diag(double d1, double d2) { return {d1, 0.0, d2}; }
  static SymMat2 scalar(double c) { return {c, 0.0, c}; }

  /// Symmetric part of a general matrix.
  static SymMat2 from_matrix(const Mat2& m) {
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
  }

  /// R diag(l1, l2) R^T, with R the rotation by `angle`.
  static SymMat2 from_eigen(double l1, double l2, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
  }

  [[nodiscard]] Mat2 matrix() const {
    Mat2 m;
    m << a11, a12, a12, a22;
    return m;
  }

  [[nodiscard]] double trace() const { return a11 + a22; }
  [[nodiscard]] double det() const { return a11 * a22 - a12 * a12; }

  [[nodiscard]] bool is_finite() const {
    return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a22);
  }

  /// Both eigenvalues strictly positive.
  [[nodiscard]] bool is_spd() const { return is_finite() && a11 > 0.0 && det() > 0.0; }

  [[nodiscard]] SymMat2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, a11 / d};
  }

  /// v^T S w
  [[nodiscard]] double bilinear(const Vec2& v, const Vec2& w) const {
    return v.x() * (a11 * w.x() + a12 * w.y()) + v.y() * (a12 * w.x() + a22 * w.y());
  }

  [[nodiscard]] double quadratic(const Vec2& v) const { return bilinear(v, v); }

  [[nodiscard]] Vec2 apply(const Vec2& v) const {
    return {a11 * v.x() + a12 * v.y(), a12 * v.x() + a22 * v.y()};
  }

  [[nodiscard]] SymEigen2 eigen() const {
    const double half_tr = 0.5 * (a11 + a22);
    const double half_diff = 0.5 * (a11 - a22);
    const double r = std::hypot(half_diff, a12);
    SymEigen2 out;
    out.values = {half_tr - r, half_tr + r};
    // angle of the eigenvector belonging to the larger eigenvalue
    const double phi = 0.5 * std::atan2(2.0 * a12, a11 - a22);
    const Vec2 big{std::cos(phi), std::sin(phi)};
    out.vectors = {Vec2{-big.y(), big.x()}, big};
    return out;
  }

  /// Largest absolute eigenvalue (spectral norm of a symmetric tensor).
  [[nodiscard]] double spectral_norm() const {
    const auto e = eigen();
    return std::max(std::abs(e.values[0]), std::abs(e.values[1]));
  }

  [[nodiscard]] double frobenius_norm() const {
    return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22);
  }

  SymMat2& operator+=(const SymMat2& o) {
    a11 += o.a11;
    a12 += o.a12;
    a22 += o.a22;
    return *this;
  }

  SymMat2& operator*=(double s) {
    a11 *= s;
    a12 *= s;
    a22 *= s;
    return *this;
  }

  friend SymMat2 operator+(SymMat2 a, const SymMat2& b) { return a += b; }
  friend SymMat2 operator-(const SymMat2& a, const SymMat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22};
  }
  friend SymMat2 operator*(SymMat2 a, double s) { return a *= s; }
  friend SymMat2 operator*(double s, SymMat2 a) { return a *= s; }
  friend bool operator==(const SymMat2&, const SymMat2&) = default;
};

/// Recompose from eigen-pairs after applying `f` to each eigenvalue.
template <typename F>
SymMat2 map_eigenvalues(const SymMat2& s, F&& f) {
  const auto e = s.eigen();
  SymMat2 out;
  for (int k = 0; k < 2; ++k) {
    const double l = f(e.values[k]);
    const Vec2& v = e.vectors[k];
    out.a11 += l * v.x() * v.x();
    out.a12 += l * v.x() * v.y();
    out.a22 += l * v.y() * v.y();
  }
  return out;
}

/// l2 operator norm of a general 2x2 matrix.
inline double spectral_norm(const Mat2& a) {
  const SymMat2 ata = SymMat2::from_matrix(a.transpose() * a);
  return std::sqrt(std::max(0.0, ata.eigen().values[1]));
}

}  // namespace anidmp
