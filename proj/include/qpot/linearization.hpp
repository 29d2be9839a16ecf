#pragma once

#include "qpot/linalg.hpp"

namespace qpot {

/// Symmetric M such that U(x) ≈ (x - x₀)ᵀ M (x - x₀) near a stable equilibrium
/// with Jacobian J and diffusion Σ = σ(x₀).
struct QuasiPotentialMatrix {
  Mat2 M;
  double identity_residual;  // max-abs entry of M Σ Σᵀ M + ½(JᵀM + MJ), relative
};

/// Maps the linearization to dy = (Σ⁻¹JΣ) y dt + √ε dW, applies the closed-form
/// quadratic quasi-potential there, and maps back: M = Σ⁻ᵀ [[A, B], [B, C]] Σ⁻¹.
///
/// Throws std::invalid_argument if Σ is singular or J is not stable, and
/// ConsistencyError if the stationary Hamilton-Jacobi identity fails to 1e-10.
QuasiPotentialMatrix linear_quasipotential_matrix(const Mat2& J, const Mat2& sigma);

/// Residual of M D M + ½(JᵀM + MJ) = 0 (D = ΣΣᵀ) scaled by the size of its terms.
double quadratic_hj_residual(const Mat2& M, const Mat2& J, const Mat2& D);

/// True when both eigenvalues of J have negative real part.
bool is_stable(const Mat2& J);

}  // namespace qpot
