#include "qpot/linearization.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"

namespace qpot {

bool is_stable(const Mat2& J) { return trace(J) < 0.0 && det(J) > 0.0; }

double quadratic_hj_residual(const Mat2& M, const Mat2& J, const Mat2& D) {
  const Mat2 quad = M * D * M;
  const Mat2 lin = 0.5 * (transpose(J) * M + M * J);
  const double scale = std::fmax(1e-300, max_abs(quad) + max_abs(lin));
  return max_abs(quad + lin) / scale;
}

QuasiPotentialMatrix linear_quasipotential_matrix(const Mat2& J, const Mat2& sigma) {
  const double ds = det(sigma);
  if (!(std::fabs(ds) >= 1e-14 * max_abs(sigma) * max_abs(sigma)) || max_abs(sigma) == 0.0) {
    throw std::invalid_argument("quasi-potential matrix: singular diffusion matrix");
  }
  if (!is_stable(J)) throw std::invalid_argument("quasi-potential matrix: J is not stable");

  const Mat2 sigma_inv = inverse(sigma);
  const Mat2 g = sigma_inv * J * sigma;
  const double tr = g.a + g.d;
  const double skew = g.c - g.b;  // g21 - g12
  const double denom = tr * tr + skew * skew;
  const double alpha = tr * tr / denom;
  const double beta = skew * tr / denom;
  const double qa = -(alpha * g.a + beta * g.c);
  const double qb = -(alpha * g.b + beta * g.d);
  const double qc = -(alpha * g.d - beta * g.b);
  const Mat2 Q{qa, qb, qb, qc};
  const Mat2 M = symmetrized(transpose(sigma_inv) * Q * sigma_inv);

  const double residual = quadratic_hj_residual(M, J, symmetrized(sigma * transpose(sigma)));
  if (!(residual < 1e-10)) {
    std::ostringstream msg;
    msg << "quasi-potential matrix fails the Hamilton-Jacobi identity (relative residual "
        << residual << ")";
    throw ConsistencyError(msg.str());
  }
  return {M, residual};
}

}  // namespace qpot
