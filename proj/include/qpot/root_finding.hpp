#pragma once

#include <functional>

namespace qpot {

struct RootResult {
  double root;
  bool converged;
  int iterations;
};

/// Wilkinson-style hybrid: a secant step through the two most recent iterates is
/// taken only if it lands strictly inside the current sign-change bracket;
/// otherwise the bracket is bisected. Stops when the bracket is narrower than
/// `tol` or |f| <= `tol_f`.
///
/// Throws std::invalid_argument unless f(a) and f(b) have opposite signs (a zero
/// at an endpoint is accepted and returned). When `max_iter` is exhausted the
/// result is the midpoint of the last bracket with converged = false.
RootResult hybrid_secant_bisection(const std::function<double(double)>& f, double a, double b,
                                   double tol, double tol_f, int max_iter);

/// Same algorithm with the endpoint values already known. Used by the update
/// rules, which evaluate the derivative at the endpoints anyway.
template <typename F>
RootResult hybrid_secant_bisection(F&& f, double a, double b, double fa, double fb, double tol,
                                   double tol_f, int max_iter);

}  // namespace qpot

#include "qpot/detail/root_finding_impl.hpp"
