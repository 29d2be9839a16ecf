#pragma once

#include <array>
#include <string>
#include <utility>

#include "qpot/model.hpp"

namespace qpot {

/// Operator-site occupancy state: three digits in {0 free, 1 CI, 2 Cro}, written in
/// the order (O_R3, O_R2, O_R1).
struct BindingState {
  std::string code;  // e.g. "012"
  int n_ci;          // number of '1' digits
  int n_cro;         // number of '2' digits
  double energy;     // G(s), kcal/mol
};

inline constexpr std::size_t kBindingStates = 27;

/// Parameters of the CI/Cro genetic switch (Aurell et al. parameterization).
struct LambdaPhageParams {
  /// Indexed by the base-3 value of the state code ("000" -> 0, "222" -> 26).
  std::array<BindingState, kBindingStates> table;
  double RT = 0.617;
  double S_CI = 1.0;
  double S_Cro = 20.0;
  double R_RM = 0.115;
  double R_RM_u = 0.01045;
  double R_R = 0.30;
  double tau_CI = 2943.0;
  double tau_Cro = 5194.0;
  double dG_CI = -11.1;
  double dG_Cro = -7.0;
  double V_cell = 2e-15;  // liters
  double N_A = 6.022140857e23;

  static LambdaPhageParams defaults();
  /// Base-3 index of a state code; throws std::invalid_argument for malformed codes.
  static std::size_t state_index(const std::string& code);
};

/// Dimer concentrations ([CI], [Cro]) in molar from molecule counts.
/// Throws std::invalid_argument for negative counts.
std::pair<double, double> lambda_phage_dimers(const LambdaPhageParams& p, double n_ci,
                                              double n_cro);

/// P_s ∝ [CI]^i_s [Cro]^j_s exp(-G(s)/RT), normalized, indexed like the table.
std::array<double, kBindingStates> lambda_phage_state_probabilities(const LambdaPhageParams& p,
                                                                    double ci, double cro);

/// Promoter activities (f_CI, f_Cro) at the given counts.
std::pair<double, double> lambda_phage_promoter_rates(const LambdaPhageParams& p, double n_ci,
                                                      double n_cro);

/// CSV dump of the binding table: "state,i_s,j_s,G".
std::string lambda_phage_table_csv(const LambdaPhageParams& p);

class LambdaPhageModel final : public Model {
 public:
  enum class Diffusion { Diagonal, Identity };

  explicit LambdaPhageModel(Diffusion diffusion = Diffusion::Diagonal,
                            LambdaPhageParams params = LambdaPhageParams::defaults());

  std::string name() const override { return "lambda-phage"; }
  Vec2 drift(Vec2 x) const override;
  Mat2 diffusion(Vec2 x) const override;
  /// The lysogenic state, Newton-refined at construction.
  AttractorSpec attractor() const override { return AttractorSpec::stable_point(lysogenic_); }
  bool identity_diffusion() const override { return diffusion_ == Diffusion::Identity; }
  Domain default_domain() const override { return {0.0, 250.0, 0.0, 250.0}; }
  BoundaryPolicy default_boundary_policy() const override {
    return BoundaryPolicy::ComputeWholeDomain;
  }
  LocalData local(Vec2 x) const override;

  Vec2 lysogenic_state() const { return lysogenic_; }
  Vec2 lytic_state() const { return lytic_; }
  static constexpr Vec2 saddle_seed() { return {115.0625, 18.6875}; }
  Diffusion diffusion_kind() const { return diffusion_; }
  const LambdaPhageParams& params() const { return params_; }

 private:
  struct Eval {
    Vec2 drift;
    double g2_ci;
    double g2_cro;
  };
  Eval evaluate(Vec2 x) const;

  Diffusion diffusion_;
  LambdaPhageParams params_;
  std::array<double, kBindingStates> boltzmann_{};
  Vec2 lysogenic_{};
  Vec2 lytic_{};
};

}  // namespace qpot
