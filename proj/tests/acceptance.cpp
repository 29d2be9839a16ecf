// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qpot/action.hpp"
#include "qpot/app.hpp"
#include "qpot/io.hpp"
#include "qpot/lambda_phage.hpp"
#include "qpot/linearization.hpp"
#include "qpot/models.hpp"
#include "qpot/postproc.hpp"
#include "qpot/rates.hpp"
#include "qpot/solver.hpp"
#include "support.hpp"

using namespace qpot;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Set by every timed solve; checked under criterion 8.
bool g_all_solves_monotone = true;
std::size_t g_monotone_solves = 0;

struct Timed {
  SolveResult result;
  double seconds;
};

Timed timed_solve(const Model& model, const SolverConfig& config) {
  const auto t0 = Clock::now();
  SolveResult r = solve(model, config);
  const double s = seconds_since(t0);
  for (std::size_t k = 1; k < r.accept_order.size(); ++k) {
    if (r.u[r.accept_order[k]] < r.u[r.accept_order[k - 1]]) {
      g_all_solves_monotone = false;
      break;
    }
  }
  ++g_monotone_solves;
  return {std::move(r), s};
}

double polar_error(std::size_t N, int K, double* seconds = nullptr) {
  static std::map<std::pair<std::size_t, int>, std::pair<double, double>> memo;
  const auto key = std::pair{N, K};
  if (!memo.count(key)) {
    const PolarModel m;
    const Timed t = timed_solve(m, SolverConfig::for_model(m, N, K));
    memo[key] = {error_report(t.result, m).normalized_max_abs, t.seconds};
  }
  if (seconds) *seconds = memo[key].second;
  return memo[key].first;
}

double linear_error(std::size_t N, int K, double alpha, double gamma) {
  const auto m = LinearModel::test_problem(alpha, gamma);
  return error_report(timed_solve(m, SolverConfig::for_model(m, N, K)).result, m).normalized_max_abs;
}

const std::vector<std::size_t> kStudyN{128, 256, 512, 1024};

Outcome criterion1() {
  Outcome o;
  double secs = 0.0;
  const double e1024 = polar_error(1024, 40, &secs);
  const double target1024 = 0.743 * std::pow(1024.0, -0.928);
  o.require(e1024 <= 2 * target1024 && e1024 >= target1024 / 2,
            "N=1024 K=40 error " + fmt(e1024) + " within factor 2 of " + fmt(target1024));
  o.require(secs < 30.0, "N=1024 K=40 solve time " + fmt(secs) + " s < 30 s");
  const double e512 = polar_error(512, 26);
  o.require(e512 <= 2 * 2.3e-3 && e512 >= 2.3e-3 / 2,
            "N=512 K=26 error " + fmt(e512) + " within factor 2 of 2.3e-3");
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::vector<double> ns, es;
  std::string row;
  for (std::size_t N : kStudyN) {
    const int K = rule_of_thumb_K(N);
    ns.push_back(static_cast<double>(N));
    es.push_back(polar_error(N, K));
    row += " N=" + std::to_string(N) + ",K=" + std::to_string(K) + ":" + fmt(es.back());
  }
  const auto fit = fit_power_law(ns, es);
  o.require(fit && fit->p >= 0.7 && fit->p <= 1.2,
            "polar fit p = " + (fit ? fmt(fit->p) : std::string("none")) + " in [0.7, 1.2];" + row);
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::vector<double> ns, es;
  std::string row;
  for (std::size_t N : kStudyN) {
    ns.push_back(static_cast<double>(N));
    es.push_back(linear_error(N, rule_of_thumb_K(N), 0.0, 1.0));
    row += " N=" + std::to_string(N) + ":" + fmt(es.back());
  }
  const auto fit = fit_power_law(ns, es);
  o.require(fit && fit->p >= 1.0,
            "linear alpha=0 gamma=1 fit p = " + (fit ? fmt(fit->p) : std::string("none")) + " >= 1.0;" + row);
  const std::vector<double> gammas{2.0 / 7, 1.0 / 3, 2.0 / 5, 0.5, 2.0 / 3, 1, 1.5, 2, 2.5, 3, 3.5};
  double worst = 0.0;
  double worst_gamma = 0.0;
  for (double g : gammas) {
    const double e = linear_error(512, 26, 0.0, g);
    if (e > worst) {
      worst = e;
      worst_gamma = g;
    }
  }
  o.require(worst < 2e-2, "N=512 K=26 alpha=0, worst error over the gamma list " + fmt(worst) +
                              " (gamma=" + fmt(worst_gamma) + ") < 2e-2");
  return o;
}

Outcome criterion4() {
  Outcome o;
  double best = INFINITY;
  int best_K = 0;
  for (int K = 4; K <= 40; ++K) {
    const double e = polar_error(512, K);
    if (e < best) {
      best = e;
      best_K = K;
    }
  }
  const double e26 = polar_error(512, 26);
  const double e4 = polar_error(512, 4);
  const double e60 = polar_error(512, 60);
  o.require(e26 <= 1.2 * best, "error(K=26) " + fmt(e26) + " within 20% of min " + fmt(best) +
                                   " (K=" + std::to_string(best_K) + ")");
  o.require(e4 >= 2 * best, "error(K=4) " + fmt(e4) + " >= 2 x min");
  o.require(e60 >= best, "error(K=60) " + fmt(e60) + " >= min");
  return o;
}

double symmetry_defect(double alpha, double* max_u) {
  const MaierSteinModel m(alpha, 2.0);
  const Timed t = timed_solve(m, SolverConfig::for_model(m, 512, 20));
  const ScalarField u = accepted_field(t.result);
  const Grid& g = u.grid;
  double defect = 0.0;
  double top = 0.0;
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double a = u.at(i, j);
      const double b = u.at(i, g.ny() - 1 - j);
      if (std::isfinite(a)) top = std::max(top, a);
      if (std::isfinite(a) && std::isfinite(b)) defect = std::max(defect, std::abs(a - b));
    }
  }
  *max_u = top;
  return defect;
}

Outcome criterion5() {
  Outcome o;
  double max0 = 0.0;
  double max1 = 0.0;
  const double d0 = symmetry_defect(0.0, &max0);
  const double d1 = symmetry_defect(std::numbers::pi / 5, &max1);
  o.require(d0 < 5e-3 * max0, "alpha=0 defect " + fmt(d0) + " < 5e-3 maxU = " + fmt(5e-3 * max0));
  o.require(d1 > 10 * 5e-3 * max1,
            "alpha=pi/5 defect " + fmt(d1) + " > 10 x 5e-3 maxU = " + fmt(5e-2 * max1));
  return o;
}

struct LambdaRun {
  double rate = 0.0;
  double seconds = 0.0;
};

LambdaRun lambda_rate(LambdaPhageModel::Diffusion diffusion) {
  const LambdaPhageModel m(diffusion);
  const Timed t = timed_solve(m, SolverConfig::for_model(m, 1024, rule_of_thumb_K(1024)));
  const ScalarField u = accepted_field(t.result);
  const VectorField grad = gradient_field(u);
  RateRequest req;
  req.epsilon = 1.0;
  req.saddle = find_saddle(m, LambdaPhageModel::saddle_seed());
  req.equilibrium = m.attractor().point;
  req.map = map_to_saddle(u, grad, m, req.saddle, req.equilibrium);
  return {transition_time(req, u, m).rate, t.seconds};
}

Outcome criterion6() {
  Outcome o;
  const LambdaPhageModel m;
  const Vec2 lytic = m.lytic_state();
  const Vec2 lyso = m.lysogenic_state();
  o.require(std::abs(lytic.x - 0.1654) < 0.5 && std::abs(lytic.y - 203.0115) < 0.5,
            "lytic state (" + fmt(lytic.x) + ", " + fmt(lytic.y) + ") near (0.1654, 203.0115)");
  o.require(std::abs(lyso.x - 212) < 0.5 && std::abs(lyso.y - 4.5) < 0.5,
            "lysogenic state (" + fmt(lyso.x) + ", " + fmt(lyso.y) + ") near (212, 4.5)");
  const Vec2 s = find_saddle(m, LambdaPhageModel::saddle_seed());
  o.require(norm(s - LambdaPhageModel::saddle_seed()) < 1.0,
            "saddle (" + fmt(s.x) + ", " + fmt(s.y) + ") within 1 of (115.0625, 18.6875)");

  const LambdaRun identity = lambda_rate(LambdaPhageModel::Diffusion::Identity);
  const LambdaRun diagonal = lambda_rate(LambdaPhageModel::Diffusion::Diagonal);
  const double ref_identity = 3.76072e-6;
  const double ref_diagonal = 4.29250e-6;
  o.require(std::abs(identity.rate / ref_identity - 1) <= 0.25,
            "identity rate " + fmt(identity.rate) + " within 25% of " + fmt(ref_identity));
  o.require(std::abs(diagonal.rate / ref_diagonal - 1) <= 0.25,
            "diagonal rate " + fmt(diagonal.rate) + " within 25% of " + fmt(ref_diagonal));
  o.require(diagonal.rate / identity.rate > 1.0,
            "diagonal/identity ratio " + fmt(diagonal.rate / identity.rate) + " > 1");
  o.require(identity.seconds < 60 && diagonal.seconds < 60,
            "N=1024 solve times " + fmt(identity.seconds) + " s, " + fmt(diagonal.seconds) + " s < 60 s");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const MaierSteinModel m(0.0, 2.0);
  const Timed t = timed_solve(m, SolverConfig::for_model(m, 2048, 25));
  o.require(t.seconds <= 60.0, "Maier-Stein N=2048 K=25 solve " + fmt(t.seconds) + " s <= 60 s");
  return o;
}

// Criterion 8 property checks.

bool action_nonnegative() {
  for (int k = 0; k < 10000; ++k) {
    const Mat2 A = testing::random_spd(1e-3, 1e3);
    const Vec2 d = std::pow(10.0, testing::uniform(-6, 3)) * testing::random_vec();
    const Vec2 b = k % 10 == 0 ? testing::uniform(-3, 3) * (A * d) : testing::random_vec(5.0);
    if (segment_action(d, A, b) < -1e-14) return false;
  }
  return true;
}

bool triangle_matches_grid_search() {
  int updated = 0;
  for (int attempt = 0; updated < 100 && attempt < 100000; ++attempt) {
    const double h = 0.01;
    TriangleProblem p;
    p.h = h;
    const double angle = testing::uniform(0.0, 2 * std::numbers::pi);
    p.x1 = {h * std::cos(angle), h * std::sin(angle)};
    const double r = h * testing::uniform(1.0, 10.0);
    const double phi = angle + testing::uniform(0.3, 2.8);
    p.x = {r * std::cos(phi), r * std::sin(phi)};
    p.U0 = testing::uniform(0.0, 1.0);
    p.U1 = p.U0 + testing::uniform(-0.5, 0.5) * h;
    p.b_m0 = testing::random_vec(2.0);
    p.b_m1 = p.b_m0 + testing::random_vec(0.2);
    p.A_m0 = testing::random_spd(0.2, 5.0);
    p.A_m1 = p.A_m0 + 0.05 * testing::random_spd(0.0, 1.0);
    const TriangleUpdate t = triangle_update(p);
    if (!t.updated()) continue;
    ++updated;
    double grid = INFINITY;
    for (int k = 0; k <= 100000; ++k) grid = std::min(grid, triangle_objective(p, k / 100000.0));
    if (std::abs(t.value - grid) >= 1e-8) return false;
  }
  return updated == 100;
}

double worst_hj_identity() {
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Mat2 J = testing::random_stable();
    const Mat2 sigma = testing::random_invertible();
    const auto q = linear_quasipotential_matrix(J, sigma);
    worst = std::max(worst, quadratic_hj_residual(q.M, J, sigma * transpose(sigma)));
  }
  return worst;
}

double worst_probability_sum() {
  const auto params = LambdaPhageParams::defaults();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto P = lambda_phage_state_probabilities(params, std::pow(10.0, testing::uniform(-12, -5)),
                                                    std::pow(10.0, testing::uniform(-12, -5)));
    double sum = 0.0;
    for (double v : P) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

double quadrature_order() {
  const MaierSteinModel model(0.4, 3.0);
  const Vec2 x0{-0.6, 0.3};
  const Vec2 dir{0.8, 0.6};
  const double h = 4.0 / 128;
  std::vector<double> ls, es;
  for (double l : {h, h / 2, h / 4, h / 8}) {
    const Vec2 x = x0 + l * dir;
    const Vec2 d = x - x0;
    double oracle = 0.0;
    constexpr int kPieces = 10000;
    for (int k = 0; k < kPieces; ++k) {
      const Vec2 at = x0 + ((k + 0.5) / kPieces) * d;
      const Mat2 A = covariance_inverse(model, at);
      oracle += segment_action(d, A, model.drift(at));
    }
    oracle /= kPieces;
    ls.push_back(l);
    es.push_back(std::abs(geometric_action_segment(x0, x, model) - oracle));
  }
  const auto fit = fit_power_law(ls, es);
  return fit ? -fit->p : 0.0;
}

bool field_round_trip() {
  const Grid g(33, 17, Domain{-1.5, 2.25, 0.0, 1.0});
  ScalarField u(g, 0.0);
  for (double& v : u.values) v = testing::uniform(-10, 10);
  u[0] = kInfinity;
  u[1] = kNaN;
  const ScalarField back = decode_scalar_field(encode_field(u));
  return encode_field(back) == encode_field(u);
}

Outcome criterion8() {
  Outcome o;
  o.require(action_nonnegative(), "segment action >= 0 on 1e4 random segments");
  o.require(g_all_solves_monotone && g_monotone_solves > 0,
            "accepted values nondecreasing in accept order in all " + std::to_string(g_monotone_solves) +
                " acceptance solves");
  o.require(triangle_matches_grid_search(), "triangle update matches a 1e5-point grid search to 1e-8 on 100 problems");
  const double hj = worst_hj_identity();
  o.require(hj < 1e-10, "quadratic HJ identity residual " + fmt(hj) + " < 1e-10 on 100 random (J, sigma)");
  const double psum = worst_probability_sum();
  o.require(psum < 1e-12, "binding-state probabilities sum to 1 within " + fmt(psum));
  const double order = quadrature_order();
  o.require(order >= 2.7, "midpoint quadrature order " + fmt(order) + " >= 2.7");
  o.require(field_round_trip(), "field file round trip is bit exact");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"polar accuracy at N=1024 and N=512", criterion1},
      {"polar convergence order", criterion2},
      {"linear test order and gamma sweep", criterion3},
      {"K saturation", criterion4},
      {"Maier-Stein axis symmetry", criterion5},
      {"Lambda Phage equilibria, saddle and rates", criterion6},
      {"Maier-Stein N=2048 performance", criterion7},
      {"property suites", criterion8},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("CRITERION %zu %s: %s (%.1f s)\n", k + 1, o.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), seconds_since(t0));
    for (const auto& note : o.notes) std::printf("    %s\n", note.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
