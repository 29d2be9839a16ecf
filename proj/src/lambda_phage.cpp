#include "qpot/lambda_phage.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"

namespace qpot {

namespace {

// (state, G) as tabulated; i_s and j_s are derived from the digits.
constexpr std::pair<const char*, double> kEnergies[] = {
    {"000", 0.0},   {"001", -12.5}, {"010", -10.5}, {"100", -9.5},  {"011", -25.7},
    {"101", -22.0}, {"110", -22.9}, {"111", -35.4}, {"002", -14.4}, {"020", -13.1},
    {"200", -15.5}, {"021", -25.6}, {"120", -22.6}, {"121", -35.1}, {"201", -28.0},
    {"210", -26.0}, {"211", -41.2}, {"012", -24.9}, {"102", -23.9}, {"112", -37.3},
    {"022", -27.5}, {"202", -29.9}, {"220", -28.6}, {"222", -43.0}, {"221", -41.1},
    {"212", -40.4}, {"122", -37.0},
};

double dimer_concentration(double monomer, double dG, double RT) {
  // ½n + c - sqrt(n c + c²) with c = e^{ΔG/RT}/8, rewritten to avoid cancellation:
  // (½n + c)² - (n c + c²) = n²/4.
  const double c = std::exp(dG / RT) / 8.0;
  return 0.25 * monomer * monomer / (0.5 * monomer + c + std::sqrt(monomer * c + c * c));
}

}  // namespace

std::size_t LambdaPhageParams::state_index(const std::string& code) {
  if (code.size() != 3) throw std::invalid_argument("binding state code must have 3 digits");
  std::size_t idx = 0;
  for (char ch : code) {
    if (ch < '0' || ch > '2') throw std::invalid_argument("binding state digits must be 0, 1, 2");
    idx = 3 * idx + static_cast<std::size_t>(ch - '0');
  }
  return idx;
}

LambdaPhageParams LambdaPhageParams::defaults() {
  LambdaPhageParams p;
  std::array<bool, kBindingStates> seen{};
  for (const auto& [code, g] : kEnergies) {
    const std::string s(code);
    const auto idx = state_index(s);
    int n_ci = 0;
    int n_cro = 0;
    for (char ch : s) {
      n_ci += ch == '1';
      n_cro += ch == '2';
    }
    p.table[idx] = {s, n_ci, n_cro, g};
    seen[idx] = true;
  }
  for (bool b : seen) {
    if (!b) throw std::logic_error("binding table is incomplete");
  }
  return p;
}

std::pair<double, double> lambda_phage_dimers(const LambdaPhageParams& p, double n_ci,
                                              double n_cro) {
  if (n_ci < 0.0 || n_cro < 0.0) throw std::invalid_argument("molecule counts must be >= 0");
  const double volume = p.V_cell * p.N_A;
  return {dimer_concentration(n_ci / volume, p.dG_CI, p.RT),
          dimer_concentration(n_cro / volume, p.dG_Cro, p.RT)};
}

std::array<double, kBindingStates> lambda_phage_state_probabilities(const LambdaPhageParams& p,
                                                                    double ci, double cro) {
  if (ci < 0.0 || cro < 0.0) throw std::invalid_argument("concentrations must be >= 0");
  std::array<double, kBindingStates> w{};
  double total = 0.0;
  for (std::size_t s = 0; s < kBindingStates; ++s) {
    const auto& st = p.table[s];
    w[s] = std::pow(ci, st.n_ci) * std::pow(cro, st.n_cro) * std::exp(-st.energy / p.RT);
    total += w[s];
  }
  for (auto& v : w) v /= total;
  return w;
}

namespace {

// Sums of state probabilities feeding the two promoters; digits are (O_R3, O_R2, O_R1).
struct PromoterSums {
  double rm_stimulated;    // O_R3 free, CI on O_R2
  double rm_basal;         // O_R3 free, O_R2 free or Cro-bound
  double r_active;         // O_R1 and O_R2 free
};

// Base-3 indices of the states in each sum.
constexpr std::size_t kRmStimulated[] = {3, 4, 5};        // 010 011 012
constexpr std::size_t kRmBasal[] = {0, 1, 2, 6, 7, 8};    // 000 001 002 020 021 022
constexpr std::size_t kRActive[] = {0, 9, 18};            // 000 100 200

template <typename Prob>
PromoterSums promoter_sums(Prob&& prob) {
  PromoterSums s{};
  for (auto i : kRmStimulated) s.rm_stimulated += prob(i);
  for (auto i : kRmBasal) s.rm_basal += prob(i);
  for (auto i : kRActive) s.r_active += prob(i);
  return s;
}

}  // namespace

std::pair<double, double> lambda_phage_promoter_rates(const LambdaPhageParams& p, double n_ci,
                                                      double n_cro) {
  const auto [ci, cro] = lambda_phage_dimers(p, n_ci, n_cro);
  const auto prob = lambda_phage_state_probabilities(p, ci, cro);
  const auto s = promoter_sums([&](std::size_t i) { return prob[i]; });
  return {p.R_RM * s.rm_stimulated + p.R_RM_u * s.rm_basal, p.R_R * s.r_active};
}

std::string lambda_phage_table_csv(const LambdaPhageParams& p) {
  std::ostringstream out;
  out << "state,i_s,j_s,G\n";
  for (const auto& st : p.table) {
    out << st.code << ',' << st.n_ci << ',' << st.n_cro << ',' << st.energy << '\n';
  }
  return out.str();
}

LambdaPhageModel::LambdaPhageModel(Diffusion diffusion, LambdaPhageParams params)
    : diffusion_(diffusion), params_(std::move(params)) {
  for (std::size_t s = 0; s < kBindingStates; ++s) {
    boltzmann_[s] = std::exp(-params_.table[s].energy / params_.RT);
  }
  const auto lyso = refine_equilibrium(*this, {212.0, 4.5});
  const auto lytic = refine_equilibrium(*this, {0.1654, 203.0115});
  if (!lyso.converged || !lytic.converged) {
    throw ConvergenceError("lambda phage: equilibrium refinement did not converge");
  }
  lysogenic_ = lyso.point;
  lytic_ = lytic.point;
}

LambdaPhageModel::Eval LambdaPhageModel::evaluate(Vec2 x) const {
  if (x.x < 0.0 || x.y < 0.0) {
    std::ostringstream msg;
    msg << "lambda phage model: negative molecule count (" << x.x << ", " << x.y << ")";
    throw DomainError(msg.str());
  }
  const auto& p = params_;
  const auto [ci, cro] = lambda_phage_dimers(p, x.x, x.y);
  const double ci_pow[4] = {1.0, ci, ci * ci, ci * ci * ci};
  const double cro_pow[4] = {1.0, cro, cro * cro, cro * cro * cro};
  std::array<double, kBindingStates> w{};
  double total = 0.0;
  for (std::size_t s = 0; s < kBindingStates; ++s) {
    const auto& st = p.table[s];
    w[s] = ci_pow[st.n_ci] * cro_pow[st.n_cro] * boltzmann_[s];
    total += w[s];
  }
  const double inv_total = 1.0 / total;
  const auto sums = promoter_sums([&](std::size_t i) { return w[i] * inv_total; });
  const double f_ci = p.R_RM * sums.rm_stimulated + p.R_RM_u * sums.rm_basal;
  const double f_cro = p.R_R * sums.r_active;
  Eval e;
  e.drift = {p.S_CI * f_ci - x.x / p.tau_CI, p.S_Cro * f_cro - x.y / p.tau_Cro};
  e.g2_ci = p.S_CI * p.S_CI * f_ci + x.x / p.tau_CI;
  e.g2_cro = p.S_Cro * p.S_Cro * f_cro + x.y / p.tau_Cro;
  return e;
}

Vec2 LambdaPhageModel::drift(Vec2 x) const { return evaluate(x).drift; }

Mat2 LambdaPhageModel::diffusion(Vec2 x) const {
  if (diffusion_ == Diffusion::Identity) return Mat2::identity();
  const auto e = evaluate(x);
  return Mat2::diagonal(std::sqrt(e.g2_ci), std::sqrt(e.g2_cro));
}

LocalData LambdaPhageModel::local(Vec2 x) const {
  const auto e = evaluate(x);
  if (diffusion_ == Diffusion::Identity) return {e.drift, Mat2::identity()};
  if (!(e.g2_ci > 0.0) || !(e.g2_cro > 0.0)) {
    std::ostringstream msg;
    msg << "singular diffusion matrix at x = (" << x.x << ", " << x.y << ")";
    throw SingularDiffusionError(msg.str());
  }
  return {e.drift, Mat2::diagonal(1.0 / e.g2_ci, 1.0 / e.g2_cro)};
}

}  // namespace qpot
