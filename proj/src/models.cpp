#include "qpot/models.hpp"

#include <cmath>
#include <sstream>

#include "qpot/errors.hpp"
#include "qpot/linearization.hpp"

namespace qpot {

LinearModel::LinearModel(const Mat2& J, const Mat2& sigma)
    : J_(J), sigma_(sigma), inv_cov_(covariance_inverse(sigma, {0.0, 0.0})),
      M_(linear_quasipotential_matrix(J, sigma).M) {}

LinearModel LinearModel::test_problem(double alpha, double gamma) {
  return LinearModel({-2.0, -10.0, 20.0, -1.0}, build_rotation_scaled_sigma(alpha, gamma));
}

// ---------------------------------------------------------------------------
// Polar test

namespace {

struct PolarTerms {
  double r;
  double f;
  double g;
};

PolarTerms polar_terms(Vec2 x) {
  const double r2 = x.x * x.x + x.y * x.y;
  const double r = std::sqrt(r2);
  if (!(r >= 1e-8)) {
    std::ostringstream msg;
    msg << "polar model is undefined at the origin (queried x = (" << x.x << ", " << x.y << "))";
    throw DomainError(msg.str());
  }
  const double sin_phi = x.y / r;
  const double radial = 1.0 - r2 / 9.0;
  // g uses sinφ (not sinφ/r²): this is the choice for which the closed-form U is exact.
  return {r, radial + sin_phi / r2, sin_phi - radial};
}

}  // namespace

Vec2 PolarModel::drift(Vec2 x) const {
  const auto t = polar_terms(x);
  return {x.y * t.g + x.x * t.f, -x.x * t.g + x.y * t.f};
}

Mat2 PolarModel::diffusion(Vec2 x) const {
  const auto t = polar_terms(x);
  return {x.x / t.r, -x.y, x.y / t.r, x.x};
}

LocalData PolarModel::local(Vec2 x) const {
  const auto t = polar_terms(x);
  const Vec2 b{x.y * t.g + x.x * t.f, -x.x * t.g + x.y * t.f};
  // σ⁻¹ = [[x1/r, x2/r], [-x2/r², x1/r²]] (the polar Jacobian), so A = σ⁻ᵀσ⁻¹.
  const double r = t.r;
  const double r4 = r * r * r * r;
  const double a11 = x.x * x.x / (r * r) + x.y * x.y / r4;
  const double a22 = x.y * x.y / (r * r) + x.x * x.x / r4;
  const double a12 = x.x * x.y / (r * r) - x.x * x.y / r4;
  return {b, {a11, a12, a12, a22}};
}

std::optional<double> PolarModel::exact_u(Vec2 x) const {
  const auto t = polar_terms(x);
  const double r2 = t.r * t.r;
  return r2 * (r2 / 18.0 - 1.0) + 4.5 + 2.0 * (1.0 - x.x / t.r);
}

std::optional<Vec2> PolarModel::exact_grad_u(Vec2 x) const {
  const auto t = polar_terms(x);
  const double r = t.r;
  const double r3 = r * r * r;
  const double radial = 2.0 * r * r / 9.0 - 2.0;
  return Vec2{radial * x.x - 2.0 * x.y * x.y / r3, radial * x.y + 2.0 * x.x * x.y / r3};
}

Vec2 PolarModel::rotational_component(Vec2 x) const {
  const auto t = polar_terms(x);
  const double r3 = t.r * t.r * t.r;
  const double radial = 1.0 - t.r * t.r / 9.0;
  return {x.x * x.y / r3 - x.y * radial, x.y * x.y / r3 + x.x * radial};
}

// ---------------------------------------------------------------------------
// Maier-Stein

MaierSteinModel::MaierSteinModel(double alpha, double gamma)
    : alpha_(alpha), gamma_(gamma), sigma_(build_rotation_scaled_sigma(alpha, gamma, true)),
      inv_cov_(covariance_inverse(sigma_, {0.0, 0.0})) {}

Vec2 MaierSteinModel::drift(Vec2 x) const {
  return {x.x - x.x * x.x * x.x - 10.0 * x.x * x.y * x.y, -(1.0 + x.x * x.x) * x.y};
}

std::optional<Mat2> MaierSteinModel::jacobian(Vec2 x) const {
  return Mat2{1.0 - 3.0 * x.x * x.x - 10.0 * x.y * x.y, -20.0 * x.x * x.y, -2.0 * x.x * x.y,
              -(1.0 + x.x * x.x)};
}

}  // namespace qpot
