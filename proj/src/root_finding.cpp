#include "qpot/root_finding.hpp"

namespace qpot {

RootResult hybrid_secant_bisection(const std::function<double(double)>& f, double a, double b,
                                   double tol, double tol_f, int max_iter) {
  return hybrid_secant_bisection(f, a, b, f(a), f(b), tol, tol_f, max_iter);
}

}  // namespace qpot
