#pragma once

#include <string>

#include "qpot/field.hpp"
#include "qpot/linalg.hpp"
#include "qpot/model.hpp"
#include "qpot/postproc.hpp"
#include "qpot/solver.hpp"

namespace qpot {

/// Where the Hessians at the equilibrium and the saddle come from.
enum class HessianSource {
  Mesh,           // second differences of the computed field
  Linearization,  // smooth quadratic solution of the linearized problem
};
const char* to_string(HessianSource source);
/// Parses "mesh" or "linearization"; throws std::invalid_argument otherwise.
HessianSource parse_hessian_source(const std::string& text);

struct RateRequest {
  double epsilon = 1.0;
  Vec2 saddle{};
  Vec2 equilibrium{};
  Path map;  // from the equilibrium to the saddle
  int hessian_stencil_mult = 4;
  HessianSource hessian_source = HessianSource::Mesh;
};

struct RateEstimate {
  double expected_time = 0.0;
  double rate = 0.0;  // 1 / expected_time
  double barrier = 0.0;  // U at the saddle
  double lambda_plus = 0.0;
  Mat2 hessian_equilibrium{};
  Mat2 hessian_saddle{};
  double det_hessian_equilibrium = 0.0;
  double det_hessian_saddle = 0.0;
  double path_integral = 0.0;  // ∫F ds along the MAP
  double log_expected_time = 0.0;

  /// key=value lines.
  std::string to_record() const;
};

/// Central second differences around the node nearest to `at`: pure partials from the
/// nodes at ±m·h and ±2m·h (the centre is not used), the mixed partial from the four
/// diagonal nodes at ±m·h. Exact for quadratics; the result is symmetric.
///
/// Throws DomainError if the stencil leaves the mesh or touches a non-finite value,
/// std::invalid_argument if m < 1.
Mat2 hessian_of_u(const ScalarField& u, Vec2 at, int m = 4);

/// Hessian at an arbitrary point: bilinear blend of hessian_of_u at the four corners
/// of the containing cell.
Mat2 interpolated_hessian(const ScalarField& u, Vec2 at, int m = 4);

/// F = ∇·(b + ½ σσᵀ ∇U) + ½ a·∇U with a_i = Σ_j ∂_j (σσᵀ)_ij, expanded as
/// ∇·b + ½ tr(σσᵀ H) + a·∇U; gradient and Hessian from the mesh.
/// Throws DomainError where the stencils are unavailable.
double f_integrand(const Model& model, const ScalarField& u, const VectorField& gradient, Vec2 x,
                   int m = 4);

/// Composite trapezoid rule for ∫F ds along the path's arc length.
double path_integral_of_f(const Model& model, const ScalarField& u, const VectorField& gradient,
                          const Path& path, int m = 4);

/// Expected exit time T = (2π/λ₊) √(|det H(x*)| / det H(x₀)) exp(∫F ds) exp(U(x*)/ε).
///
/// Throws NotASaddleError if J(x*) has no positive eigenvalue, DegenerateHessianError
/// if det H(x₀) <= 0 or det H(x*) = 0, std::invalid_argument for ε <= 0 or a MAP whose
/// ends are farther than 2h from x₀ and x*.
RateEstimate transition_time(const RateRequest& request, const ScalarField& u, const Model& model);
RateEstimate transition_time(const RateRequest& request, const SolveResult& result,
                             const Model& model);

/// Newton refinement of b(x) = 0 from `seed` to ‖b‖ < 1e-10, checked to be a saddle.
///
/// Throws ConvergenceError (message carries the best iterate) when Newton fails within
/// 100 damped steps, NotASaddleError when the limit is not a saddle.
Vec2 find_saddle(const Model& model, Vec2 seed);

/// MAP from the equilibrium to the saddle, traced backward from a point one mesh step
/// off the saddle along its unstable direction on the equilibrium's side. The exact
/// endpoints are prepended and appended.
///
/// Throws ConvergenceError if the trace does not reach the equilibrium.
Path map_to_saddle(const ScalarField& u, const VectorField& gradient, const Model& model,
                   Vec2 saddle, Vec2 equilibrium);

/// Solution C of J C + C Jᵀ = -D; throws DegenerateHessianError when it is singular.
Mat2 solve_lyapunov(const Mat2& J, const Mat2& D);

/// Hessian of the smooth quadratic solution of the linearized Hamilton-Jacobi
/// equation at an equilibrium or saddle: H = C⁻¹ with J C + C Jᵀ = -σσᵀ.
Mat2 linearized_hessian(const Model& model, Vec2 point);

}  // namespace qpot
