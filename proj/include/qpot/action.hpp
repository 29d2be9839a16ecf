#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "qpot/linalg.hpp"
#include "qpot/model.hpp"

namespace qpot {

/// √(vᵀ A v). Throws NonPositiveDefiniteError if vᵀAv < -1e-14.
double a_norm(Vec2 v, const Mat2& A);

/// Midpoint-rule geometric action along a straight segment with displacement d,
/// using A and b sampled at the segment midpoint:
/// ‖d‖_A ‖b‖_A - ⟨d, b⟩_A  (nonnegative by Cauchy-Schwarz).
/// Throws NonPositiveDefiniteError if a quadratic form is below -1e-14.

namespace detail {
double segment_action_checked(Vec2 d, const Mat2& A, Vec2 b);
}  // namespace detail

inline double segment_action(Vec2 d, const Mat2& A, Vec2 b) {
  const Vec2 Ab = A * b;
  const double qd = bilinear(d, A, d);
  const double qb = dot(b, Ab);
  if (!(qd >= 0.0 && qb >= 0.0)) [[unlikely]] return detail::segment_action_checked(d, A, b);
  const double value = std::sqrt(qd * qb) - dot(d, Ab);
  return value > 0.0 ? value : 0.0;
}

/// Same, sampling the model at (x0 + x) / 2.
double geometric_action_segment(Vec2 x0, Vec2 x, const Model& model);

/// U0 plus the midpoint action of [x0, x].
double one_point_update(Vec2 x0, Vec2 x, double U0, const Model& model);

/// Data of a triangle update at x from the segment [x0, x1]. The b and A values
/// are sampled at the midpoints of [x0, x] and [x1, x]; intermediate s values use
/// linear interpolation between them.
struct TriangleProblem {
  Vec2 x0;
  Vec2 x1;
  Vec2 x;
  double U0 = 0.0;
  double U1 = 0.0;
  Vec2 b_m0;
  Vec2 b_m1;
  Mat2 A_m0;
  Mat2 A_m1;
  double h = 0.0;  // mesh step, sets the degeneracy threshold; 0 means use |x1 - x0|

  /// Samples the model at both midpoints.
  static TriangleProblem from_model(const Model& model, Vec2 x0, Vec2 x1, Vec2 x, double U0,
                                    double U1, double h = 0.0);
};

/// Twice the triangle area below 1e-12 h².
bool is_degenerate(const TriangleProblem& p);

/// U0 + s(U1 - U0) + ‖x - x_s‖ ‖b_s‖ - ⟨x - x_s, b_s⟩, all in the A_s metric.
/// When x = x_s the action term is taken as its limit 0.
double triangle_objective(const TriangleProblem& p, double s);

/// d/ds of triangle_objective. nullopt when ‖x - x_s‖_A = 0 (derivative undefined).
/// When ‖b_s‖_A < 1e-30 the term divided by it is replaced by ±∞ according to the
/// sign of its numerator (0 if the numerator vanishes).
std::optional<double> triangle_objective_derivative(const TriangleProblem& p, double s);

struct TriangleUpdate {
  enum class Status { Updated, Degenerate, NoInteriorMinimum, DerivativeUndefined, RootFailure };

  Status status = Status::NoInteriorMinimum;
  double value = 0.0;  // valid when status == Updated
  double s = 0.0;

  bool updated() const { return status == Status::Updated; }
};

/// Quantities of the segment [x0, x] shared by all triangles with vertex x0. Lets a
/// caller run the s = 0 sign test of many triangles without recomputing norms.
struct SegmentData {
  Vec2 d;    // x - x0
  Vec2 b;    // drift at the midpoint
  Mat2 A;    // A at the midpoint
  Vec2 Ad;
  Vec2 Ab;
  double nd = 0.0;  // ‖d‖_A
  double nb = 0.0;  // ‖b‖_A
  double nb_over_nd = 0.0;
  double nd_over_nb = 0.0;  // unused when nb < 1e-30

  /// ‖d‖‖b‖ - ⟨d, b⟩ clamped at 0, i.e. segment_action(d, A, b).
  double action() const {
    const double value = nd * nb - dot(d, Ab);
    return value > 0.0 ? value : 0.0;
  }
};

namespace detail {
SegmentData segment_data_checked(Vec2 d, const LocalData& at_midpoint);
}  // namespace detail

inline SegmentData segment_data(Vec2 x0, Vec2 x, const LocalData& at_midpoint) {
  SegmentData seg;
  seg.d = x - x0;
  seg.b = at_midpoint.drift;
  seg.A = at_midpoint.inv_cov;
  seg.Ad = seg.A * seg.d;
  seg.Ab = seg.A * seg.b;
  const double qd = dot(seg.d, seg.Ad);
  const double qb = dot(seg.b, seg.Ab);
  if (!(qd >= 0.0 && qb >= 0.0)) [[unlikely]] return detail::segment_data_checked(seg.d, at_midpoint);
  seg.nd = std::sqrt(qd);
  seg.nb = std::sqrt(qb);
  seg.nb_over_nd = seg.nb / seg.nd;
  if (seg.nb >= 1e-30) seg.nd_over_nb = seg.nd / seg.nb;
  return seg;
}

/// Derivative of the triangle objective of (x0, x1, x) at an end of [0, 1]: pass
/// the data of [x0, x] for s = 0 or of [x1, x] for s = 1. The slopes are
/// dx = x0 - x1, dU = U1 - U0, db = b_m1 - b_m0, dA = A_m1 - A_m0.
/// Agrees with triangle_objective_derivative up to rounding.
inline double triangle_derivative_at_vertex(const SegmentData& seg, Vec2 dx, double dU, Vec2 db,
                                            const Mat2& dA) {
  const Vec2 dAd = dA * seg.d;
  const double geometry = dot(seg.Ad, dx) + 0.5 * dot(seg.d, dAd);
  const double field = dot(seg.Ab, db) + 0.5 * bilinear(seg.b, dA, seg.b);
  const double cross = dot(dx, seg.Ab) + dot(seg.Ad, db) + dot(dAd, seg.b);
  double field_term;
  if (seg.nb < 1e-30) {
    const double numer = seg.nd * field;
    field_term = numer > 0.0 ? std::numeric_limits<double>::infinity()
                 : numer < 0.0 ? -std::numeric_limits<double>::infinity()
                               : 0.0;
  } else {
    field_term = seg.nd_over_nb * field;
  }
  return dU + seg.nb_over_nd * geometry + field_term - cross;
}

/// Same with A constant along the edge (dA = 0).
inline double triangle_derivative_at_vertex(const SegmentData& seg, Vec2 dx, double dU, Vec2 db) {
  const double geometry = dot(seg.Ad, dx);
  const double field = dot(seg.Ab, db);
  const double cross = dot(dx, seg.Ab) + dot(seg.Ad, db);
  double field_term;
  if (seg.nb < 1e-30) {
    const double numer = seg.nd * field;
    field_term = numer > 0.0 ? std::numeric_limits<double>::infinity()
                 : numer < 0.0 ? -std::numeric_limits<double>::infinity()
                               : 0.0;
  } else {
    field_term = seg.nd_over_nb * field;
  }
  return dU + seg.nb_over_nd * geometry + field_term - cross;
}

/// A number with the sign of triangle_derivative_at_vertex (the derivative times
/// ‖d‖_A ‖b‖_A), for the vertex whose segment has displacement d and midpoint data `at`.
/// Needs one square root and no division.
inline double triangle_derivative_sign_at_vertex(Vec2 d, const LocalData& at, Vec2 dx, double dU,
                                                 Vec2 db, const Mat2& dA) {
  const Mat2& A = at.inv_cov;
  const Vec2 b = at.drift;
  const Vec2 Ad = A * d;
  const Vec2 Ab = A * b;
  const double qd = dot(d, Ad);
  const double qb = dot(b, Ab);
  if (!(qb >= 1e-60) || !(qd > 0.0)) [[unlikely]] {
    return triangle_derivative_at_vertex(segment_data(Vec2{}, d, at), dx, dU, db, dA);
  }
  const Vec2 dAd = dA * d;
  const double geometry = dot(Ad, dx) + 0.5 * dot(d, dAd);
  const double field = dot(Ab, db) + 0.5 * bilinear(b, dA, b);
  const double cross = dot(dx, Ab) + dot(Ad, db) + dot(dAd, b);
  // multiplied through by ‖d‖‖b‖ > 0
  return (dU - cross) * std::sqrt(qd * qb) + qb * geometry + qd * field;
}

/// Same with A constant along the edge (dA = 0).
inline double triangle_derivative_sign_at_vertex(Vec2 d, const LocalData& at, Vec2 dx, double dU,
                                                 Vec2 db) {
  const Mat2& A = at.inv_cov;
  const Vec2 b = at.drift;
  const Vec2 Ad = A * d;
  const Vec2 Ab = A * b;
  const double qd = dot(d, Ad);
  const double qb = dot(b, Ab);
  if (!(qb >= 1e-60) || !(qd > 0.0)) [[unlikely]] {
    return triangle_derivative_at_vertex(segment_data(Vec2{}, d, at), dx, dU, db);
  }
  const double geometry = dot(Ad, dx);
  const double field = dot(Ab, db);
  const double cross = dot(dx, Ab) + dot(Ad, db);
  return (dU - cross) * std::sqrt(qd * qb) + qb * geometry + qd * field;
}

/// Solver tolerances for the 1-D minimization. s is resolved to 1e-12.
struct TriangleTolerances {
  double tol_s = 1e-12;
  double tol_f_rel = 1e-12;  // tol_f = tol_f_rel (1 + |U1 - U0|)
  int max_iter = 100;
};

/// Minimizes the triangle objective over s in [0, 1]. A value is produced only when
/// the derivative is negative at s = 0 and positive at s = 1, i.e. the minimizer
/// is interior; the stationary point is found by hybrid secant/bisection.
TriangleUpdate triangle_update(const TriangleProblem& p, const TriangleTolerances& tol = {});

}  // namespace qpot
