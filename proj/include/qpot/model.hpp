#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpot/grid.hpp"
#include "qpot/linalg.hpp"

namespace qpot {

/// How the attractor the quasi-potential is measured from is represented.
struct AttractorSpec {
  enum class Kind { StablePoint, PointSet };

  Kind kind = Kind::StablePoint;
  Vec2 point{};               // StablePoint
  std::vector<Vec2> points;   // PointSet: samples of a limit cycle or heteroclinic set

  static AttractorSpec stable_point(Vec2 p) { return {Kind::StablePoint, p, {}}; }
  static AttractorSpec point_set(std::vector<Vec2> pts) {
    return {Kind::PointSet, {}, std::move(pts)};
  }
};

enum class BoundaryPolicy { StopOnBoundary, ComputeWholeDomain };

/// Drift and inverse covariance at one point; what the update rules consume.
struct LocalData {
  Vec2 drift;
  Mat2 inv_cov;  // A = (σσᵀ)⁻¹
};

/// Problem definition for dx = b(x) dt + σ(x) √ε dW in the plane.
///
/// Implementations are immutable after construction and safe to share across threads.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual Vec2 drift(Vec2 x) const = 0;
  virtual Mat2 diffusion(Vec2 x) const = 0;
  virtual AttractorSpec attractor() const = 0;

  /// Analytic Jacobian of the drift, if the model has one.
  virtual std::optional<Mat2> jacobian(Vec2 /*x*/) const { return std::nullopt; }
  virtual std::optional<double> exact_u(Vec2 /*x*/) const { return std::nullopt; }
  virtual std::optional<Vec2> exact_grad_u(Vec2 /*x*/) const { return std::nullopt; }
  virtual bool has_exact_u() const { return false; }
  /// a_i = Σ_j ∂_j (σσᵀ)_ij, if known analytically.
  virtual std::optional<Vec2> diffusion_divergence(Vec2 /*x*/) const { return std::nullopt; }
  /// True when σ ≡ I on the whole plane.
  virtual bool identity_diffusion() const { return false; }

  virtual Domain default_domain() const = 0;
  virtual BoundaryPolicy default_boundary_policy() const { return BoundaryPolicy::StopOnBoundary; }

  /// Drift and A at x in one call. Overridden by models where both share expensive work.
  virtual LocalData local(Vec2 x) const;
};

/// A(x) = (σσᵀ)⁻¹, exactly symmetric. Throws SingularDiffusionError when
/// |det σ| < 1e-14 ‖σ‖².
Mat2 covariance_inverse(const Model& model, Vec2 x);
Mat2 covariance_inverse(const Mat2& sigma, Vec2 where);

/// σσᵀ (= A⁻¹).
Mat2 diffusion_tensor(const Model& model, Vec2 x);

/// Analytic Jacobian when available, else central differences with step
/// ε_mach^(1/3) max(1, |x_k|) per component.
Mat2 jacobian_of(const Model& model, Vec2 x);
Mat2 finite_difference_jacobian(const Model& model, Vec2 x);

/// Σ_j ∂_j (σσᵀ)_ij: analytic when provided, else central differences.
Vec2 diffusion_divergence_of(const Model& model, Vec2 x);

/// R(α) diag(1, γ) R(α)ᵀ. With `similarity` the second factor is written R(α)⁻¹, which
/// is the same matrix because R is orthogonal. Throws std::invalid_argument for γ <= 0.
Mat2 build_rotation_scaled_sigma(double alpha, double gamma, bool similarity = false);

struct NewtonResult {
  Vec2 point;
  double residual;   // ‖b(point)‖
  int iterations;
  bool converged;
};

/// Damped Newton iteration on b(x) = 0 with the (possibly finite-difference) Jacobian.
NewtonResult refine_equilibrium(const Model& model, Vec2 seed, double tol = 1e-10,
                                int max_iter = 100);

}  // namespace qpot
