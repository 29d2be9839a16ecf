#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace qpot {

/// A point or vector in the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm_squared(Vec2 a) { return dot(a, a); }

/// 2x2 matrix, row-major: [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diagonal(double d0, double d1) { return {d0, 0.0, 0.0, d1}; }
  static constexpr Mat2 zero() { return {}; }

  constexpr double operator()(int row, int col) const {
    return row == 0 ? (col == 0 ? a : b) : (col == 0 ? c : d);
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 operator+(const Mat2& m, const Mat2& n) {
  return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
  return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
}
constexpr Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a, s * m.b, s * m.c, s * m.d};
}
constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
          m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

constexpr Mat2 transpose(const Mat2& m) { return {m.a, m.c, m.b, m.d}; }
constexpr double det(const Mat2& m) { return m.a * m.d - m.b * m.c; }
constexpr double trace(const Mat2& m) { return m.a + m.d; }
constexpr Mat2 symmetrized(const Mat2& m) {
  const double off = 0.5 * (m.b + m.c);
  return {m.a, off, off, m.d};
}

/// Inverse via the adjugate. The caller checks det != 0.
constexpr Mat2 inverse(const Mat2& m) {
  const double inv = 1.0 / det(m);
  return {m.d * inv, -m.b * inv, -m.c * inv, m.a * inv};
}

/// vᵀ M w
constexpr double bilinear(Vec2 v, const Mat2& m, Vec2 w) { return dot(v, m * w); }

/// Largest absolute entry.
inline double max_abs(const Mat2& m) {
  return std::fmax(std::fmax(std::fabs(m.a), std::fabs(m.b)),
                   std::fmax(std::fabs(m.c), std::fabs(m.d)));
}

/// Eigenvalues of a general 2x2 matrix, possibly complex.
inline std::array<std::complex<double>, 2> eigenvalues(const Mat2& m) {
  const double half_tr = 0.5 * trace(m);
  const double disc = half_tr * half_tr - det(m);
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    return {std::complex<double>(half_tr - r, 0.0), std::complex<double>(half_tr + r, 0.0)};
  }
  const double r = std::sqrt(-disc);
  return {std::complex<double>(half_tr, -r), std::complex<double>(half_tr, r)};
}

/// Eigenvalues of a symmetric matrix in ascending order.
inline std::array<double, 2> symmetric_eigenvalues(const Mat2& m) {
  const double mean = 0.5 * (m.a + m.d);
  const double r = std::hypot(0.5 * (m.a - m.d), 0.5 * (m.b + m.c));
  return {mean - r, mean + r};
}

/// Rotation by angle (radians).
inline Mat2 rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c, -s, s, c};
}

}  // namespace qpot
