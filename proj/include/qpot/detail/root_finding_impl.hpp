#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace qpot {

template <typename F>
RootResult hybrid_secant_bisection(F&& f, double a, double b, double fa, double fb, double tol,
                                   double tol_f, int max_iter) {
  if (fa == 0.0) return {a, true, 0};
  if (fb == 0.0) return {b, true, 0};
  if (!(fa * fb < 0.0)) {
    throw std::invalid_argument("hybrid_secant_bisection: f(a) and f(b) must differ in sign");
  }
  double lo = a, f_lo = fa;
  double hi = b, f_hi = fb;
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(f_lo, f_hi);
  }
  // The two most recent iterates drive the secant.
  double x_prev = lo, f_prev = f_lo;
  double x_cur = hi, f_cur = f_hi;
  double width_before = hi - lo;
  int slow_steps = 0;

  for (int it = 1; it <= max_iter; ++it) {
    double x = x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev);
    // A stalled secant (bracket not halving twice running) forces a bisection.
    if (!(x > lo && x < hi) || slow_steps >= 2) {
      x = 0.5 * (lo + hi);
      slow_steps = 0;
    }
    const double fx = f(x);
    if ((fx < 0.0) == (f_lo < 0.0)) {
      lo = x;
      f_lo = fx;
    } else {
      hi = x;
      f_hi = fx;
    }
    x_prev = x_cur;
    f_prev = f_cur;
    x_cur = x;
    f_cur = fx;

    if (std::fabs(fx) <= tol_f || hi - lo <= tol) return {x, true, it};
    const double width = hi - lo;
    slow_steps = width > 0.5 * width_before ? slow_steps + 1 : 0;
    width_before = width;
  }
  return {0.5 * (lo + hi), false, max_iter};
}

}  // namespace qpot
