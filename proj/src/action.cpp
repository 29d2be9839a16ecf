#include "qpot/action.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qpot/errors.hpp"
#include "qpot/root_finding.hpp"

namespace qpot {

namespace {

[[noreturn]] void throw_not_positive(double q) {
  std::ostringstream msg;
  msg << "quadratic form is negative (" << q << "); matrix is not positive definite";
  throw NonPositiveDefiniteError(msg.str());
}

inline double checked_norm(Vec2 v, const Mat2& A) {
  const double q = bilinear(v, A, v);
  if (q < 0.0) {
    if (q < -1e-14) throw_not_positive(q);
    return 0.0;
  }
  return std::sqrt(q);
}

}  // namespace

double a_norm(Vec2 v, const Mat2& A) { return checked_norm(v, A); }

namespace detail {

double segment_action_checked(Vec2 d, const Mat2& A, Vec2 b) {
  const double value = checked_norm(d, A) * checked_norm(b, A) - bilinear(d, A, b);
  return value > 0.0 ? value : 0.0;
}

SegmentData segment_data_checked(Vec2 d, const LocalData& at_midpoint) {
  SegmentData seg;
  seg.d = d;
  seg.b = at_midpoint.drift;
  seg.A = at_midpoint.inv_cov;
  seg.Ad = seg.A * seg.d;
  seg.Ab = seg.A * seg.b;
  seg.nd = checked_norm(seg.d, seg.A);
  seg.nb = checked_norm(seg.b, seg.A);
  seg.nb_over_nd = seg.nb / seg.nd;
  if (seg.nb >= 1e-30) seg.nd_over_nb = seg.nd / seg.nb;
  return seg;
}

}  // namespace detail

double geometric_action_segment(Vec2 x0, Vec2 x, const Model& model) {
  const LocalData m = model.local(0.5 * (x0 + x));
  return segment_action(x - x0, m.inv_cov, m.drift);
}

double one_point_update(Vec2 x0, Vec2 x, double U0, const Model& model) {
  return U0 + geometric_action_segment(x0, x, model);
}

TriangleProblem TriangleProblem::from_model(const Model& model, Vec2 x0, Vec2 x1, Vec2 x,
                                            double U0, double U1, double h) {
  const LocalData m0 = model.local(0.5 * (x0 + x));
  const LocalData m1 = model.local(0.5 * (x1 + x));
  return {x0, x1, x, U0, U1, m0.drift, m1.drift, m0.inv_cov, m1.inv_cov, h};
}

bool is_degenerate(const TriangleProblem& p) {
  const Vec2 e = p.x1 - p.x0;
  const Vec2 f = p.x - p.x0;
  const double twice_area = std::fabs(e.x * f.y - e.y * f.x);
  const double h = p.h > 0.0 ? p.h : norm(e);
  return twice_area < 1e-12 * h * h;
}

namespace {

/// s-independent differences of the interpolation data.
struct Slopes {
  Vec2 dx;  // d(x - x_s)/ds = x0 - x1
  Vec2 db;
  Mat2 dA;
};

Slopes slopes(const TriangleProblem& p) {
  return {p.x0 - p.x1, p.b_m1 - p.b_m0, p.A_m1 - p.A_m0};
}

struct Interpolated {
  Vec2 d;   // x - x_s
  Vec2 b;   // b_ms
  Mat2 A;   // A_ms
};

inline Interpolated interpolate(const TriangleProblem& p, double s) {
  const Vec2 xs = p.x0 + s * (p.x1 - p.x0);
  return {p.x - xs, p.b_m0 + s * (p.b_m1 - p.b_m0), p.A_m0 + s * (p.A_m1 - p.A_m0)};
}

inline std::optional<double> derivative(const TriangleProblem& p, const Slopes& k, double s) {
  const auto q = interpolate(p, s);
  const double nd = checked_norm(q.d, q.A);
  if (nd == 0.0) return std::nullopt;
  const double nb = checked_norm(q.b, q.A);

  const Vec2 Ad = q.A * q.d;
  const Vec2 Ab = q.A * q.b;
  const Vec2 dAd = k.dA * q.d;
  const double geometry = dot(Ad, k.dx) + 0.5 * dot(q.d, dAd);
  const double field = dot(Ab, k.db) + 0.5 * bilinear(q.b, k.dA, q.b);
  const double cross = dot(k.dx, Ab) + dot(Ad, k.db) + dot(dAd, q.b);

  double field_term;
  if (nb < 1e-30) {
    const double numer = nd * field;
    field_term = numer > 0.0 ? std::numeric_limits<double>::infinity()
                 : numer < 0.0 ? -std::numeric_limits<double>::infinity()
                               : 0.0;
  } else {
    field_term = nd / nb * field;
  }
  return (p.U1 - p.U0) + nb / nd * geometry + field_term - cross;
}

}  // namespace

double triangle_objective(const TriangleProblem& p, double s) {
  const auto q = interpolate(p, s);
  const double nd = checked_norm(q.d, q.A);
  const double action = nd == 0.0 ? 0.0 : nd * checked_norm(q.b, q.A) - bilinear(q.d, q.A, q.b);
  return p.U0 + s * (p.U1 - p.U0) + action;
}

std::optional<double> triangle_objective_derivative(const TriangleProblem& p, double s) {
  return derivative(p, slopes(p), s);
}

TriangleUpdate triangle_update(const TriangleProblem& p, const TriangleTolerances& tol) {
  using Status = TriangleUpdate::Status;
  if (is_degenerate(p)) return {Status::Degenerate, 0.0, 0.0};
  const Slopes k = slopes(p);
  // Most triangles fail the sign test at s = 0, so s = 1 is evaluated only when needed.
  const auto d0 = derivative(p, k, 0.0);
  if (!d0) return {Status::DerivativeUndefined, 0.0, 0.0};
  if (!(*d0 < 0.0)) return {Status::NoInteriorMinimum, 0.0, 0.0};
  const auto d1 = derivative(p, k, 1.0);
  if (!d1) return {Status::DerivativeUndefined, 0.0, 0.0};
  if (!(*d1 > 0.0)) return {Status::NoInteriorMinimum, 0.0, 0.0};

  auto f = [&](double s) {
    // Nondegenerate triangles keep x off the segment, so the derivative is defined.
    return derivative(p, k, s).value_or(0.0);
  };
  const double tol_f = tol.tol_f_rel * (1.0 + std::fabs(p.U1 - p.U0));
  const auto root = hybrid_secant_bisection(f, 0.0, 1.0, *d0, *d1, tol.tol_s, tol_f, tol.max_iter);
  if (!root.converged) return {Status::RootFailure, 0.0, root.root};
  return {Status::Updated, triangle_objective(p, root.root), root.root};
}

}  // namespace qpot
