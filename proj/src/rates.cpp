#include "qpot/rates.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"
#include "qpot/linearization.hpp"

namespace qpot {

namespace {

std::string point_text(Vec2 p) {
  std::ostringstream out;
  out.precision(17);
  out << "(" << p.x << ", " << p.y << ")";
  return out.str();
}

/// Signed offset of the node nearest to `at` along one axis.
long nearest_index(double coord, double origin, double step) {
  return std::lround((coord - origin) / step);
}

Mat2 hessian_at_node(const ScalarField& u, long i, long j, int m) {
  const Grid& g = u.grid;
  const long nx = static_cast<long>(g.nx());
  const long ny = static_cast<long>(g.ny());
  const long reach = 2L * m;
  if (i - reach < 0 || j - reach < 0 || i + reach >= nx || j + reach >= ny) {
    throw DomainError("Hessian stencil around node (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") leaves the mesh");
  }
  auto value = [&](long di, long dj) {
    const double v = u.at(static_cast<std::size_t>(i + di), static_cast<std::size_t>(j + dj));
    if (!std::isfinite(v)) {
      throw DomainError("Hessian stencil around node (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") touches a non-finite value");
    }
    return v;
  };
  const double hx = m * g.h1();
  const double hy = m * g.h2();
  // Pure second derivatives skip the centre node: u(±2s) - u(±s) = 3s²u'' + O(s⁴).
  // The centre value at an equilibrium is pinned to 0 while the computed field around it
  // carries an O(h²) offset, which the three-point formula would amplify by 1/s².
  const double uxx = (value(2 * m, 0) + value(-2 * m, 0) - value(m, 0) - value(-m, 0)) / (3.0 * hx * hx);
  const double uyy = (value(0, 2 * m) + value(0, -2 * m) - value(0, m) - value(0, -m)) / (3.0 * hy * hy);
  const double uxy = (value(m, m) - value(m, -m) - value(-m, m) + value(-m, -m)) / (4.0 * hx * hy);
  return {uxx, uxy, uxy, uyy};
}

void check_multiplier(int m) {
  if (m < 1) throw std::invalid_argument("Hessian stencil multiplier must be at least 1");
}

/// Positive eigenvalue of J at a saddle, or NotASaddleError.
double unstable_eigenvalue(const Mat2& J, Vec2 where) {
  const auto ev = eigenvalues(J);
  const bool real = ev[0].imag() == 0.0 && ev[1].imag() == 0.0;
  if (!real || !(ev[1].real() > 0.0) || !(ev[0].real() < 0.0)) {
    std::ostringstream msg;
    msg << "point " << point_text(where) << " is not a saddle: Jacobian eigenvalues " << ev[0]
        << ", " << ev[1];
    throw NotASaddleError(msg.str());
  }
  return ev[1].real();
}

}  // namespace

const char* to_string(HessianSource source) {
  switch (source) {
    case HessianSource::Mesh: return "mesh";
    case HessianSource::Linearization: return "linearization";
  }
  return "unknown";
}

HessianSource parse_hessian_source(const std::string& text) {
  if (text == "mesh") return HessianSource::Mesh;
  if (text == "linearization") return HessianSource::Linearization;
  throw std::invalid_argument("unknown Hessian source '" + text +
                              "' (expected 'mesh' or 'linearization')");
}

std::string RateEstimate::to_record() const {
  std::ostringstream out;
  out.precision(17);
  out << "expected_time=" << expected_time << "\n"
      << "rate=" << rate << "\n"
      << "log_expected_time=" << log_expected_time << "\n"
      << "barrier=" << barrier << "\n"
      << "lambda_plus=" << lambda_plus << "\n"
      << "det_hessian_equilibrium=" << det_hessian_equilibrium << "\n"
      << "det_hessian_saddle=" << det_hessian_saddle << "\n"
      << "path_integral=" << path_integral << "\n"
      << "exp_path_integral=" << std::exp(path_integral) << "\n";
  return out.str();
}

Mat2 hessian_of_u(const ScalarField& u, Vec2 at, int m) {
  check_multiplier(m);
  const Domain& d = u.grid.domain();
  if (!d.contains(at)) throw DomainError("Hessian requested outside the mesh at " + point_text(at));
  return hessian_at_node(u, nearest_index(at.x, d.xmin, u.grid.h1()),
                         nearest_index(at.y, d.ymin, u.grid.h2()), m);
}

Mat2 interpolated_hessian(const ScalarField& u, Vec2 at, int m) {
  check_multiplier(m);
  const Grid& g = u.grid;
  const Domain& d = g.domain();
  if (!d.contains(at)) throw DomainError("Hessian requested outside the mesh at " + point_text(at));
  const double fx = (at.x - d.xmin) / g.h1();
  const double fy = (at.y - d.ymin) / g.h2();
  const long i = std::min(static_cast<long>(fx), static_cast<long>(g.nx()) - 2);
  const long j = std::min(static_cast<long>(fy), static_cast<long>(g.ny()) - 2);
  const double tx = fx - static_cast<double>(i);
  const double ty = fy - static_cast<double>(j);
  return (1.0 - ty) * ((1.0 - tx) * hessian_at_node(u, i, j, m) + tx * hessian_at_node(u, i + 1, j, m)) +
         ty * ((1.0 - tx) * hessian_at_node(u, i, j + 1, m) + tx * hessian_at_node(u, i + 1, j + 1, m));
}

double f_integrand(const Model& model, const ScalarField& u, const VectorField& gradient, Vec2 x,
                   int m) {
  const auto grad = interpolate(gradient, x);
  if (!grad) throw DomainError("gradient unavailable at " + point_text(x));
  const Mat2 H = interpolated_hessian(u, x, m);
  const double div_b = trace(jacobian_of(model, x));
  const Mat2 D = diffusion_tensor(model, x);
  const Vec2 a = diffusion_divergence_of(model, x);
  return div_b + 0.5 * trace(D * H) + dot(a, *grad);
}

double path_integral_of_f(const Model& model, const ScalarField& u, const VectorField& gradient,
                          const Path& path, int m) {
  const auto& pts = path.vertices();
  const auto& s = path.arclength();
  if (pts.size() < 2) return 0.0;
  double total = 0.0;
  double prev = f_integrand(model, u, gradient, pts[0], m);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double cur = f_integrand(model, u, gradient, pts[k], m);
    total += 0.5 * (prev + cur) * (s[k] - s[k - 1]);
    prev = cur;
  }
  return total;
}

Mat2 solve_lyapunov(const Mat2& J, const Mat2& D) {
  // Unknowns (c11, c12, c22) of the symmetric C.
  const double a[3][3] = {{2.0 * J.a, 2.0 * J.b, 0.0},
                          {J.c, J.a + J.d, J.b},
                          {0.0, 2.0 * J.c, 2.0 * J.d}};
  const double rhs[3] = {-D.a, -0.5 * (D.b + D.c), -D.d};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double full = det3(a);
  if (full == 0.0 || !std::isfinite(full)) {
    throw DegenerateHessianError("Lyapunov equation is singular for this Jacobian");
  }
  double c[3];
  for (int col = 0; col < 3; ++col) {
    double replaced[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) replaced[r][k] = k == col ? rhs[r] : a[r][k];
    }
    c[col] = det3(replaced) / full;
  }
  return {c[0], c[1], c[1], c[2]};
}

Mat2 linearized_hessian(const Model& model, Vec2 point) {
  const Mat2 C = solve_lyapunov(jacobian_of(model, point), diffusion_tensor(model, point));
  if (det(C) == 0.0) throw DegenerateHessianError("linearized covariance is singular");
  return symmetrized(inverse(C));
}

RateEstimate transition_time(const RateRequest& request, const ScalarField& u, const Model& model) {
  if (!(request.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  check_multiplier(request.hessian_stencil_mult);
  const double h = u.grid.h();
  if (request.map.empty()) throw std::invalid_argument("rate request has an empty MAP");
  if (norm(request.map.front() - request.equilibrium) > 2.0 * h ||
      norm(request.map.back() - request.saddle) > 2.0 * h) {
    throw std::invalid_argument("MAP must run from within 2h of the equilibrium to within 2h of "
                                "the saddle");
  }

  RateEstimate est;
  est.lambda_plus = unstable_eigenvalue(jacobian_of(model, request.saddle), request.saddle);

  const int m = request.hessian_stencil_mult;
  if (request.hessian_source == HessianSource::Mesh) {
    est.hessian_equilibrium = hessian_of_u(u, request.equilibrium, m);
    est.hessian_saddle = hessian_of_u(u, request.saddle, m);
  } else {
    est.hessian_equilibrium = linearized_hessian(model, request.equilibrium);
    est.hessian_saddle = linearized_hessian(model, request.saddle);
  }
  est.det_hessian_equilibrium = det(est.hessian_equilibrium);
  est.det_hessian_saddle = det(est.hessian_saddle);
  if (!(est.det_hessian_equilibrium > 0.0)) {
    std::ostringstream msg;
    msg << "Hessian at the equilibrium has determinant " << est.det_hessian_equilibrium
        << " (must be positive)";
    throw DegenerateHessianError(msg.str());
  }
  if (est.det_hessian_saddle == 0.0 || !std::isfinite(est.det_hessian_saddle)) {
    throw DegenerateHessianError("Hessian at the saddle is singular");
  }

  const auto barrier = interpolate(u, request.saddle);
  if (!barrier) throw DomainError("quasi-potential unavailable at the saddle");
  est.barrier = *barrier;

  est.path_integral =
      path_integral_of_f(model, u, gradient_field(u), request.map, request.hessian_stencil_mult);

  est.log_expected_time = std::log(2.0 * std::numbers::pi / est.lambda_plus) +
                          0.5 * std::log(std::fabs(est.det_hessian_saddle) /
                                         est.det_hessian_equilibrium) +
                          est.path_integral + est.barrier / request.epsilon;
  est.expected_time = std::exp(est.log_expected_time);
  est.rate = 1.0 / est.expected_time;
  return est;
}

RateEstimate transition_time(const RateRequest& request, const SolveResult& result,
                             const Model& model) {
  return transition_time(request, accepted_field(result), model);
}

Vec2 find_saddle(const Model& model, Vec2 seed) {
  const NewtonResult newton = refine_equilibrium(model, seed, 1e-10, 100);
  if (!newton.converged) {
    std::ostringstream msg;
    msg << "saddle search from " << point_text(seed) << " did not converge; best iterate "
        << point_text(newton.point) << " with |b| = " << newton.residual;
    throw ConvergenceError(msg.str());
  }
  unstable_eigenvalue(jacobian_of(model, newton.point), newton.point);
  return newton.point;
}

Path map_to_saddle(const ScalarField& u, const VectorField& gradient, const Model& model,
                   Vec2 saddle, Vec2 equilibrium) {
  const Mat2 J = jacobian_of(model, saddle);
  const double lambda = unstable_eigenvalue(J, saddle);
  // Two candidate eigenvectors; the longer one is the better conditioned.
  const Vec2 first{J.b, lambda - J.a};
  const Vec2 second{lambda - J.d, J.c};
  Vec2 dir = norm(first) >= norm(second) ? first : second;
  dir = (1.0 / norm(dir)) * dir;
  if (dot(dir, equilibrium - saddle) < 0.0) dir = -dir;

  // Try the side facing the equilibrium first; rotation can make only the other side reach it.
  std::optional<MapTrace> reached;
  TraceStatus last = TraceStatus::MaxSteps;
  for (const Vec2 side : {dir, -dir}) {
    MapTrace trace = trace_map(u, gradient, model, saddle + u.grid.h() * side);
    last = trace.status;
    if (trace.status == TraceStatus::ReachedAttractor &&
        norm(trace.path.back() - equilibrium) <= 2.0 * u.grid.h()) {
      reached = std::move(trace);
      break;
    }
  }
  if (!reached) {
    throw ConvergenceError(std::string("MAP trace from the saddle did not reach the equilibrium (") +
                           to_string(last) + ")");
  }
  const MapTrace& trace = *reached;
  std::vector<Vec2> points;
  points.reserve(trace.path.size() + 2);
  points.push_back(equilibrium);
  const auto& traced = trace.path.vertices();
  points.insert(points.end(), traced.rbegin(), traced.rend());
  points.push_back(saddle);
  return Path(points);
}

}  // namespace qpot
