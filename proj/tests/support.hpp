#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "qpot/linalg.hpp"

namespace qpot::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Vec2 random_vec(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Mat2 random_spd(double lo = 0.1, double hi = 10.0) {
  const Mat2 R = rotation(uniform(0.0, std::numbers::pi));
  return R * Mat2::diagonal(uniform(lo, hi), uniform(lo, hi)) * transpose(R);
}

/// Random matrix whose eigenvalues have negative real parts.
inline Mat2 random_stable() {
  while (true) {
    const Mat2 J{uniform(-5, 5), uniform(-5, 5), uniform(-5, 5), uniform(-5, 5)};
    const double tr = J.a + J.d;
    const double dt = J.a * J.d - J.b * J.c;
    if (tr < -0.1 && dt > 0.1) return J;
  }
}

/// Random invertible matrix with a bounded condition number.
inline Mat2 random_invertible() {
  while (true) {
    const Mat2 S{uniform(-2, 2), uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)};
    const double d = std::abs(S.a * S.d - S.b * S.c);
    if (d > 0.3) return S;
  }
}

inline double max_abs_diff(const Mat2& m, const Mat2& n) { return max_abs(m - n); }

}  // namespace qpot::testing
