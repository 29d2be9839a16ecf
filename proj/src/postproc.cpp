#include "qpot/postproc.hpp"

#include <algorithm>
#include <numbers>
#include <optional>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"

namespace qpot {

Path::Path(const std::vector<Vec2>& points) {
  for (Vec2 p : points) append(p);
}

void Path::append(Vec2 p) {
  if (vertices_.empty()) {
    vertices_.push_back(p);
    arclength_.push_back(0.0);
    return;
  }
  const double step = norm(p - vertices_.back());
  if (step == 0.0) return;
  vertices_.push_back(p);
  arclength_.push_back(arclength_.back() + step);
}

Path Path::reversed() const {
  return Path(std::vector<Vec2>(vertices_.rbegin(), vertices_.rend()));
}

ScalarField accepted_field(const SolveResult& result) {
  ScalarField u = result.u;
  for (NodeIndex n = 0; n < u.values.size(); ++n) {
    if (!result.accepted(n)) u[n] = kInfinity;
  }
  return u;
}

namespace {

/// Derivative along one axis at position k of a line of `count` values.
double line_derivative(const ScalarField& u, NodeIndex n, std::size_t k, std::size_t count,
                       std::size_t stride, double h) {
  const double c = u[n];
  if (!std::isfinite(c)) return kNaN;
  const bool has_prev = k > 0 && std::isfinite(u[n - stride]);
  const bool has_next = k + 1 < count && std::isfinite(u[n + stride]);
  if (has_prev && has_next) return (u[n + stride] - u[n - stride]) / (2.0 * h);
  if (has_next) return (u[n + stride] - c) / h;
  if (has_prev) return (c - u[n - stride]) / h;
  return kNaN;
}

template <typename T, typename Valid>
std::optional<T> bilinear_sample(const Field<T>& field, Vec2 p, Valid&& valid) {
  const Grid& g = field.grid;
  const Domain& d = g.domain();
  if (!d.contains(p)) return std::nullopt;
  const double fx = (p.x - d.xmin) / g.h1();
  const double fy = (p.y - d.ymin) / g.h2();
  const auto i = std::min(static_cast<std::size_t>(fx), g.nx() - 2);
  const auto j = std::min(static_cast<std::size_t>(fy), g.ny() - 2);
  const double tx = fx - static_cast<double>(i);
  const double ty = fy - static_cast<double>(j);
  const T& v00 = field.at(i, j);
  const T& v10 = field.at(i + 1, j);
  const T& v01 = field.at(i, j + 1);
  const T& v11 = field.at(i + 1, j + 1);
  if (!valid(v00) || !valid(v10) || !valid(v01) || !valid(v11)) return std::nullopt;
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

Vec2 characteristic_direction(const Model& model, Vec2 x, Vec2 grad) {
  return model.drift(x) + diffusion_tensor(model, x) * grad;
}

}  // namespace

VectorField gradient_field(const ScalarField& u) {
  const Grid& g = u.grid;
  VectorField grad(g, Vec2{kNaN, kNaN});
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const NodeIndex n = g.index(i, j);
      grad[n] = {line_derivative(u, n, i, g.nx(), 1, g.h1()),
                 line_derivative(u, n, j, g.ny(), g.nx(), g.h2())};
    }
  }
  return grad;
}

std::optional<double> interpolate(const ScalarField& field, Vec2 p) {
  return bilinear_sample(field, p, [](double v) { return std::isfinite(v); });
}

std::optional<Vec2> interpolate(const VectorField& field, Vec2 p) {
  return bilinear_sample(field, p, [](Vec2 v) { return is_valid(v); });
}

const char* to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::ReachedAttractor: return "reached_attractor";
    case TraceStatus::MaxSteps: return "max_steps";
    case TraceStatus::LeftAcceptedRegion: return "left_accepted_region";
    case TraceStatus::Stalled: return "stalled";
  }
  return "unknown";
}

MapTrace trace_map(const ScalarField& u, const Model& model, Vec2 start,
                   const TraceOptions& options) {
  return trace_map(u, gradient_field(u), model, start, options);
}

MapTrace trace_map(const ScalarField& u, const VectorField& gradient, const Model& model,
                   Vec2 start, const TraceOptions& options) {
  const Grid& g = u.grid;
  if (!interpolate(u, start) || !interpolate(gradient, start)) {
    std::ostringstream msg;
    msg << "MAP start (" << start.x << ", " << start.y << ") is outside the computed region";
    throw DomainError(msg.str());
  }
  const double step = options.step > 0.0 ? options.step : 0.5 * g.h();
  const std::size_t max_steps = options.max_steps > 0 ? options.max_steps : 20 * (g.nx() + g.ny());
  const double stop_radius = options.stop_radius > 0.0 ? options.stop_radius : 2.0 * g.h();

  const AttractorSpec attractor = model.attractor();
  auto near_attractor = [&](Vec2 p) {
    if (attractor.kind == AttractorSpec::Kind::StablePoint) {
      return norm(p - attractor.point) <= stop_radius;
    }
    return std::any_of(attractor.points.begin(), attractor.points.end(),
                       [&](Vec2 q) { return norm(p - q) <= stop_radius; });
  };

  enum class Probe { Ok, Outside, Stalled };
  // Unit right-hand side -v/|v| at p.
  auto rhs = [&](Vec2 p, Vec2& out) {
    const auto grad = interpolate(gradient, p);
    if (!grad) return Probe::Outside;
    Vec2 v;
    try {
      v = characteristic_direction(model, p, *grad);
    } catch (const DomainError&) {
      return Probe::Outside;
    }
    const double len = norm(v);
    if (!(len >= 1e-12)) return Probe::Stalled;
    out = (-1.0 / len) * v;
    return Probe::Ok;
  };

  MapTrace trace;
  trace.path.append(start);
  Vec2 p = start;
  // A start on a stagnation point (a saddle) moves one step to the neighbouring probe
  // point with the lowest U that has a usable direction.
  if (Vec2 probe; !near_attractor(p) && rhs(p, probe) == Probe::Stalled) {
    constexpr int kDirections = 16;
    std::optional<std::pair<double, Vec2>> best;
    for (int d = 0; d < kDirections; ++d) {
      const double angle = 2.0 * std::numbers::pi * d / kDirections;
      const Vec2 q = p + step * Vec2{std::cos(angle), std::sin(angle)};
      const auto uq = interpolate(u, q);
      if (!uq || !std::isfinite(*uq) || rhs(q, probe) != Probe::Ok) continue;
      if (!best || *uq < best->first) best = std::pair{*uq, q};
    }
    if (best) {
      p = best->second;
      trace.path.append(p);
    }
  }
  for (std::size_t k = 0; k < max_steps; ++k) {
    if (near_attractor(p)) {
      trace.status = TraceStatus::ReachedAttractor;
      trace.steps = k;
      return trace;
    }
    Vec2 k1, k2, k3, k4;
    Probe status = rhs(p, k1);
    if (status == Probe::Ok) status = rhs(p + (0.5 * step) * k1, k2);
    if (status == Probe::Ok) status = rhs(p + (0.5 * step) * k2, k3);
    if (status == Probe::Ok) status = rhs(p + step * k3, k4);
    if (status != Probe::Ok) {
      trace.status =
          status == Probe::Stalled ? TraceStatus::Stalled : TraceStatus::LeftAcceptedRegion;
      trace.steps = k;
      return trace;
    }
    p = p + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    trace.path.append(p);
  }
  trace.status = near_attractor(p) ? TraceStatus::ReachedAttractor : TraceStatus::MaxSteps;
  trace.steps = max_steps;
  return trace;
}

ScalarField hj_residual(const ScalarField& u, const Model& model) {
  const VectorField grad = gradient_field(u);
  ScalarField r(u.grid, kNaN);
  for (NodeIndex n = 0; n < r.values.size(); ++n) {
    if (!is_valid(grad[n])) continue;
    const Vec2 x = u.grid.position(n);
    try {
      r[n] = bilinear(grad[n], diffusion_tensor(model, x), grad[n]) +
             2.0 * dot(model.drift(x), grad[n]);
    } catch (const Error&) {
      // model undefined at this node; leave NaN
    }
  }
  return r;
}

Decomposition decompose_field(const ScalarField& u, const Model& model) {
  const VectorField grad = gradient_field(u);
  Decomposition out{VectorField(u.grid, Vec2{kNaN, kNaN}), !model.identity_diffusion()};
  for (NodeIndex n = 0; n < grad.values.size(); ++n) {
    if (!is_valid(grad[n])) continue;
    try {
      out.rotational[n] = model.drift(u.grid.position(n)) + 0.5 * grad[n];
    } catch (const Error&) {
    }
  }
  return out;
}

ErrorReport error_report(const ScalarField& u, const Model& model) {
  if (!model.has_exact_u()) {
    throw std::invalid_argument("error report: model '" + model.name() +
                                "' has no exact quasi-potential");
  }
  ErrorReport rep;
  double sum_sq = 0.0;
  for (NodeIndex n = 0; n < u.values.size(); ++n) {
    if (!std::isfinite(u[n])) continue;
    const auto exact = model.exact_u(u.grid.position(n));
    if (!exact) continue;
    const double err = std::fabs(u[n] - *exact);
    rep.max_abs = std::max(rep.max_abs, err);
    rep.max_u = std::max(rep.max_u, u[n]);
    sum_sq += err * err;
    ++rep.n_valid_nodes;
  }
  if (rep.n_valid_nodes > 0) rep.rms = std::sqrt(sum_sq / static_cast<double>(rep.n_valid_nodes));
  rep.normalized_max_abs = rep.max_u > 0.0 ? rep.max_abs / rep.max_u : 0.0;
  return rep;
}

ErrorReport error_report(const SolveResult& result, const Model& model) {
  return error_report(accepted_field(result), model);
}

ScalarField error_field(const ScalarField& u, const Model& model) {
  if (!model.has_exact_u()) {
    throw std::invalid_argument("error field: model '" + model.name() +
                                "' has no exact quasi-potential");
  }
  ScalarField e(u.grid, kNaN);
  for (NodeIndex n = 0; n < u.values.size(); ++n) {
    if (!std::isfinite(u[n])) continue;
    if (const auto exact = model.exact_u(u.grid.position(n))) e[n] = std::fabs(u[n] - *exact);
  }
  return e;
}

}  // namespace qpot
