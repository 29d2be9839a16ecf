#include "qpot/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"

namespace qpot {

namespace {

double fd_step(double xk) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::fmax(1.0, std::fabs(xk));
}

}  // namespace

LocalData Model::local(Vec2 x) const { return {drift(x), covariance_inverse(*this, x)}; }

Mat2 covariance_inverse(const Mat2& sigma, Vec2 where) {
  const double d = det(sigma);
  const double scale = max_abs(sigma);
  if (!(std::fabs(d) >= 1e-14 * scale * scale) || scale == 0.0) {
    std::ostringstream msg;
    msg << "singular diffusion matrix at x = (" << where.x << ", " << where.y << ")";
    throw SingularDiffusionError(msg.str());
  }
  // (σσᵀ)⁻¹ = σ⁻ᵀ σ⁻¹
  const Mat2 inv = inverse(sigma);
  return symmetrized(transpose(inv) * inv);
}

Mat2 covariance_inverse(const Model& model, Vec2 x) {
  return covariance_inverse(model.diffusion(x), x);
}

Mat2 diffusion_tensor(const Model& model, Vec2 x) {
  const Mat2 s = model.diffusion(x);
  return symmetrized(s * transpose(s));
}

Mat2 finite_difference_jacobian(const Model& model, Vec2 x) {
  const double hx = fd_step(x.x);
  const double hy = fd_step(x.y);
  const Vec2 dx = (model.drift({x.x + hx, x.y}) - model.drift({x.x - hx, x.y})) * (0.5 / hx);
  const Vec2 dy = (model.drift({x.x, x.y + hy}) - model.drift({x.x, x.y - hy})) * (0.5 / hy);
  return {dx.x, dy.x, dx.y, dy.y};
}

Mat2 jacobian_of(const Model& model, Vec2 x) {
  if (auto j = model.jacobian(x)) return *j;
  return finite_difference_jacobian(model, x);
}

Vec2 diffusion_divergence_of(const Model& model, Vec2 x) {
  if (auto a = model.diffusion_divergence(x)) return *a;
  const double hx = fd_step(x.x);
  const double hy = fd_step(x.y);
  const Mat2 dDx = (0.5 / hx) * (diffusion_tensor(model, {x.x + hx, x.y}) -
                                 diffusion_tensor(model, {x.x - hx, x.y}));
  const Mat2 dDy = (0.5 / hy) * (diffusion_tensor(model, {x.x, x.y + hy}) -
                                 diffusion_tensor(model, {x.x, x.y - hy}));
  // a_i = ∂_x D_i0 + ∂_y D_i1
  return {dDx.a + dDy.b, dDx.c + dDy.d};
}

Mat2 build_rotation_scaled_sigma(double alpha, double gamma, bool similarity) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const Mat2 r = rotation(alpha);
  const Mat2 right = similarity ? inverse(r) : transpose(r);
  return r * Mat2::diagonal(1.0, gamma) * right;
}

NewtonResult refine_equilibrium(const Model& model, Vec2 seed, double tol, int max_iter) {
  Vec2 x = seed;
  Vec2 b = model.drift(x);
  double res = norm(b);
  for (int it = 0; it < max_iter; ++it) {
    if (res < tol) return {x, res, it, true};
    const Mat2 J = jacobian_of(model, x);
    if (det(J) == 0.0 || !std::isfinite(det(J))) return {x, res, it, false};
    const Vec2 step = -(inverse(J) * b);
    double t = 1.0;
    Vec2 trial = x + step;
    double trial_res = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 30; ++k) {
      trial = x + t * step;
      try {
        trial_res = norm(model.drift(trial));
      } catch (const DomainError&) {
        trial_res = std::numeric_limits<double>::infinity();
      }
      if (trial_res < res) break;
      t *= 0.5;
    }
    if (!(trial_res < res)) return {x, res, it, false};
    x = trial;
    b = model.drift(x);
    res = norm(b);
  }
  return {x, res, max_iter, res < tol};
}

}  // namespace qpot
