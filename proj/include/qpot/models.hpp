#pragma once

#include <string>

#include "qpot/model.hpp"

namespace qpot {

/// dx = J x dt + Σ √ε dW with a stable J. The exact quasi-potential is xᵀ M x
/// with M the quasi-potential matrix of (J, Σ).
class LinearModel final : public Model {
 public:
  LinearModel(const Mat2& J, const Mat2& sigma);

  /// The rotation-dominated test matrix J = [[-2, -10], [20, -1]] with Σ(α, γ).
  static LinearModel test_problem(double alpha, double gamma);

  std::string name() const override { return "linear"; }
  Vec2 drift(Vec2 x) const override { return J_ * x; }
  Mat2 diffusion(Vec2) const override { return sigma_; }
  AttractorSpec attractor() const override { return AttractorSpec::stable_point({0.0, 0.0}); }
  std::optional<Mat2> jacobian(Vec2) const override { return J_; }
  std::optional<double> exact_u(Vec2 x) const override { return bilinear(x, M_, x); }
  std::optional<Vec2> exact_grad_u(Vec2 x) const override { return 2.0 * (M_ * x); }
  bool has_exact_u() const override { return true; }
  std::optional<Vec2> diffusion_divergence(Vec2) const override { return Vec2{}; }
  bool identity_diffusion() const override { return sigma_ == Mat2::identity(); }
  Domain default_domain() const override { return {-1.0, 1.0, -1.0, 1.0}; }
  LocalData local(Vec2 x) const override { return {J_ * x, inv_cov_}; }

  const Mat2& J() const { return J_; }
  const Mat2& sigma() const { return sigma_; }
  const Mat2& quasi_potential_matrix() const { return M_; }

 private:
  Mat2 J_;
  Mat2 sigma_;
  Mat2 inv_cov_;
  Mat2 M_;
};

/// Nonlinear test with σ(x) the Jacobian of the polar-to-Cartesian change of
/// variables; stable equilibrium (3, 0), saddle (-3, 0), exact U known.
/// Undefined at the origin: queries with ‖x‖ < 1e-8 throw DomainError.
class PolarModel final : public Model {
 public:
  std::string name() const override { return "polar"; }
  Vec2 drift(Vec2 x) const override;
  Mat2 diffusion(Vec2 x) const override;
  AttractorSpec attractor() const override { return AttractorSpec::stable_point({3.0, 0.0}); }
  std::optional<double> exact_u(Vec2 x) const override;
  std::optional<Vec2> exact_grad_u(Vec2 x) const override;
  bool has_exact_u() const override { return true; }
  Domain default_domain() const override { return {-3.8, 4.2, -4.0, 4.0}; }
  LocalData local(Vec2 x) const override;

  /// The rotational part l with b = -½ σσᵀ ∇U + l and l·∇U = 0.
  Vec2 rotational_component(Vec2 x) const;
  static constexpr Vec2 saddle() { return {-3.0, 0.0}; }
};

/// Maier-Stein drift with constant anisotropic diffusion Σ = R(α) diag(1, γ) R(α)⁻¹.
class MaierSteinModel final : public Model {
 public:
  MaierSteinModel(double alpha, double gamma);

  std::string name() const override { return "maier-stein"; }
  Vec2 drift(Vec2 x) const override;
  Mat2 diffusion(Vec2) const override { return sigma_; }
  AttractorSpec attractor() const override { return AttractorSpec::stable_point({-1.0, 0.0}); }
  std::optional<Mat2> jacobian(Vec2 x) const override;
  std::optional<Vec2> diffusion_divergence(Vec2) const override { return Vec2{}; }
  bool identity_diffusion() const override { return sigma_ == Mat2::identity(); }
  Domain default_domain() const override { return {-2.0, 2.0, -2.0, 2.0}; }
  BoundaryPolicy default_boundary_policy() const override {
    return BoundaryPolicy::ComputeWholeDomain;
  }
  LocalData local(Vec2 x) const override { return {drift(x), inv_cov_}; }

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }

 private:
  double alpha_;
  double gamma_;
  Mat2 sigma_;
  Mat2 inv_cov_;
};

}  // namespace qpot
