#include "qpot/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <type_traits>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qpot/errors.hpp"
#include "qpot/lambda_phage.hpp"
#include "qpot/linearization.hpp"
#include "qpot/models.hpp"

namespace qpot {

void SolverConfig::validate() const {
  if (K < 1) throw std::invalid_argument("solver: K must be at least 1");
  if (nx < 16 || ny < 16) throw std::invalid_argument("solver: nx and ny must be at least 16");
  domain.validate();
}

SolverConfig SolverConfig::for_model(const Model& model, std::size_t N, int K) {
  SolverConfig c;
  c.nx = N;
  c.ny = N;
  c.K = K;
  c.domain = model.default_domain();
  c.boundary_policy = model.default_boundary_policy();
  return c;
}

int rule_of_thumb_K(std::size_t N) {
  const double k = 10.0 + 4.0 * (std::log2(static_cast<double>(N)) - 7.0);
  return std::max(1, static_cast<int>(std::lround(k)));
}

double sample_anisotropy(const Model& model, const Domain& domain, int samples_per_axis) {
  double worst = 1.0;
  const int n = std::max(2, samples_per_axis);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p{domain.xmin + (domain.xmax - domain.xmin) * i / (n - 1),
                   domain.ymin + (domain.ymax - domain.ymin) * j / (n - 1)};
      try {
        const auto ev = symmetric_eigenvalues(covariance_inverse(model, p));
        if (ev[0] > 0.0) worst = std::max(worst, ev[1] / ev[0]);
      } catch (const Error&) {
        // undefined here (e.g. a coordinate singularity); not part of the sample
      }
    }
  }
  return worst;
}

std::vector<InitialValue> init_near_equilibrium(const Grid& grid, const Model& model,
                                                Vec2 equilibrium) {
  const Domain& d = grid.domain();
  if (!d.contains(equilibrium)) {
    std::ostringstream msg;
    msg << "initialization: equilibrium (" << equilibrium.x << ", " << equilibrium.y
        << ") lies outside the domain";
    throw InitializationError(msg.str());
  }
  const Mat2 J = jacobian_of(model, equilibrium);
  if (!is_stable(J)) throw InitializationError("initialization: attractor is not stable");
  const Mat2 M = linear_quasipotential_matrix(J, model.diffusion(equilibrium)).M;

  auto quadratic = [&](NodeIndex n) {
    const Vec2 r = grid.position(n) - equilibrium;
    return bilinear(r, M, r);
  };

  const double fi = (equilibrium.x - d.xmin) / grid.h1();
  const double fj = (equilibrium.y - d.ymin) / grid.h2();
  const double ri = std::round(fi);
  const double rj = std::round(fj);
  std::vector<InitialValue> out;
  if (std::fabs(fi - ri) < 1e-9 && std::fabs(fj - rj) < 1e-9) {
    const NodeIndex centre = grid.index(static_cast<std::size_t>(ri), static_cast<std::size_t>(rj));
    out.push_back({centre, 0.0, NodeLabel::AcceptedFront});
    for (NodeIndex n : neighbors8(grid, centre)) out.push_back({n, quadratic(n), NodeLabel::Considered});
    return out;
  }
  const auto i0 = std::min(static_cast<std::size_t>(std::floor(fi)), grid.nx() - 2);
  const auto j0 = std::min(static_cast<std::size_t>(std::floor(fj)), grid.ny() - 2);
  for (std::size_t dj = 0; dj < 2; ++dj) {
    for (std::size_t di = 0; di < 2; ++di) {
      const NodeIndex n = grid.index(i0 + di, j0 + dj);
      out.push_back({n, quadratic(n), NodeLabel::Considered});
    }
  }
  return out;
}

std::vector<InitialValue> init_from_point_set(const Grid& grid, const Model& model,
                                              const std::vector<Vec2>& samples, int radius_nodes) {
  if (samples.size() < 2) {
    throw InitializationError("initialization: a point-set attractor needs at least 2 samples");
  }
  const double radius = radius_nodes * grid.h();
  const Domain& d = grid.domain();
  std::vector<double> best(grid.size(), kInfinity);
  for (const Vec2& y : samples) {
    const long ilo = std::max(0L, static_cast<long>(std::ceil((y.x - radius - d.xmin) / grid.h1())));
    const long ihi = std::min(static_cast<long>(grid.nx()) - 1,
                              static_cast<long>(std::floor((y.x + radius - d.xmin) / grid.h1())));
    const long jlo = std::max(0L, static_cast<long>(std::ceil((y.y - radius - d.ymin) / grid.h2())));
    const long jhi = std::min(static_cast<long>(grid.ny()) - 1,
                              static_cast<long>(std::floor((y.y + radius - d.ymin) / grid.h2())));
    for (long j = jlo; j <= jhi; ++j) {
      for (long i = ilo; i <= ihi; ++i) {
        const NodeIndex n = grid.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        const Vec2 x = grid.position(n);
        const double dist = norm(x - y);
        if (dist > radius * (1.0 + 1e-12)) continue;
        const double q = dist == 0.0 ? 0.0 : geometric_action_segment(y, x, model);
        best[n] = std::min(best[n], q);
      }
    }
  }
  std::vector<InitialValue> out;
  for (NodeIndex n = 0; n < grid.size(); ++n) {
    if (std::isfinite(best[n])) out.push_back({n, best[n], NodeLabel::Considered});
  }
  if (out.empty()) throw InitializationError("initialization: no mesh node near the attractor samples");
  return out;
}

namespace {

constexpr std::size_t kAutoCacheBytes = std::size_t{512} << 20;
// Drift-only tables for cheap models stop paying off once they fall out of cache.
constexpr std::size_t kAutoDriftCacheBytes = std::size_t{128} << 20;

/// The sweep is instantiated per concrete model type so that the per-update model
/// calls on `final` classes are resolved statically.
template <typename ModelT>
class Sweep {
  /// A is the same everywhere: the cache holds drift only and triangle tests skip dA.
  static constexpr bool kConstMetric =
      std::is_same_v<ModelT, MaierSteinModel> || std::is_same_v<ModelT, LinearModel>;
  using CacheEntry = std::conditional_t<kConstMetric, Vec2, LocalData>;

 public:
  Sweep(const ModelT& model, const SolverConfig& config)
      : model_(model),
        config_(config),
        grid_(config.nx, config.ny, config.domain),
        disk_(grid_, config.K),
        heap_(grid_.size()),
        result_{ScalarField(grid_, kInfinity), LabelField(grid_, NodeLabel::Unknown), {}, {}, {}} {
    result_.accept_order.reserve(grid_.size());
    const std::size_t half_nodes = (2 * grid_.nx() - 1) * (2 * grid_.ny() - 1);
    const bool use_cache = config.midpoint_cache == MidpointCache::On ||
                           (config.midpoint_cache == MidpointCache::Auto &&
                            half_nodes * sizeof(CacheEntry) <=
                                (kConstMetric ? kAutoDriftCacheBytes : kAutoCacheBytes));
    if constexpr (kConstMetric) {
      metric_ = model_.local(grid_.position(0)).inv_cov;
      if (use_cache) cache_.assign(half_nodes, Vec2{kNaN, kNaN});
    } else {
      if (use_cache) cache_.assign(half_nodes, LocalData{{kNaN, kNaN}, {}});
    }
  }

  SolveResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    check_anisotropy();
    initialize();
    if (heap_.empty()) throw InitializationError("solver: initialization produced no Considered node");

    const bool stop_on_boundary = config_.boundary_policy == BoundaryPolicy::StopOnBoundary;
    while (auto top = heap_.extract_min()) {
      ++result_.stats.heap_extractions;
      const Node x0 = node(top->node);
      set_label(x0.n, NodeLabel::AcceptedFront);
      result_.accept_order.push_back(x0.n);
      if (grid_.is_boundary(x0.n)) {
        result_.stats.reached_boundary = true;
        if (stop_on_boundary) break;
      }
      retire_neighbors(x0);
      update_considered_near(x0);
      promote_unknown_neighbors(x0);
      retire_if_interior(x0);
    }
    result_.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(result_);
  }

 private:
  NodeLabel label(NodeIndex n) const { return result_.labels[n]; }
  const std::uint8_t* tags() const {
    return reinterpret_cast<const std::uint8_t*>(result_.labels.values.data());
  }
  static std::uint8_t tag(NodeLabel l) { return static_cast<std::uint8_t>(l); }
  double& u(NodeIndex n) { return result_.u[n]; }

  /// A node with its mesh coordinates, so hot loops never divide by nx.
  struct Node {
    NodeIndex n;
    std::size_t i;
    std::size_t j;
    Vec2 p;
  };
  Node node(NodeIndex n) const {
    const std::size_t i = grid_.column(n);
    const std::size_t j = grid_.row(n);
    return {n, i, j, grid_.position(i, j)};
  }
  Node node(NodeIndex n, std::size_t i, std::size_t j) const { return {n, i, j, grid_.position(i, j)}; }

  /// Model data at the midpoint of two nodes. Midpoints live on the half-step mesh,
  /// so they are memoized there when the cache is enabled.
  LocalData midpoint(const Node& a, const Node& b) {
    if constexpr (kConstMetric) {
      if (cache_.empty()) return {model_.drift(half_step_point(a, b)), metric_};
      Vec2& slot = cache_[(a.i + b.i) + (a.j + b.j) * (2 * grid_.nx() - 1)];
      if (std::isnan(slot.x)) slot = model_.drift(half_step_point(a, b));
      return {slot, metric_};
    } else {
      if (cache_.empty()) return model_.local(half_step_point(a, b));
      LocalData& slot = cache_[(a.i + b.i) + (a.j + b.j) * (2 * grid_.nx() - 1)];
      if (std::isnan(slot.drift.x)) slot = model_.local(half_step_point(a, b));
      return slot;
    }
  }

  /// Midpoint of two nodes computed from the index sums only, so every pair sharing a
  /// midpoint sees bit-identical model data with or without the cache.
  Vec2 half_step_point(const Node& a, const Node& b) const {
    const Domain& d = grid_.domain();
    return {d.xmin + 0.5 * grid_.h1() * static_cast<double>(a.i + b.i),
            d.ymin + 0.5 * grid_.h2() * static_cast<double>(a.j + b.j)};
  }

  void set_label(NodeIndex n, NodeLabel to) {
    const NodeLabel from = result_.labels[n];
    result_.labels[n] = to;
    if (config_.observer) config_.observer(n, from, to);
  }

  /// fn(index, column, row) for each in-bounds 8-neighbour.
  template <typename Fn>
  void for_each_neighbor(const Node& c, Fn&& fn) const {
    const std::size_t nx = grid_.nx();
    const std::size_t ny = grid_.ny();
    const std::size_t jlo = c.j == 0 ? 0 : c.j - 1;
    const std::size_t jhi = c.j + 1 == ny ? c.j : c.j + 1;
    const std::size_t ilo = c.i == 0 ? 0 : c.i - 1;
    const std::size_t ihi = c.i + 1 == nx ? c.i : c.i + 1;
    for (std::size_t jj = jlo; jj <= jhi; ++jj) {
      for (std::size_t ii = ilo; ii <= ihi; ++ii) {
        if (ii == c.i && jj == c.j) continue;
        fn(ii + jj * nx, ii, jj);
      }
    }
  }

  void check_anisotropy() {
    const double ratio = sample_anisotropy(model_, grid_.domain());
    result_.stats.max_anisotropy = ratio;
    if (ratio > 10.0) {
      std::ostringstream msg;
      msg << "anisotropy ratio of A reaches " << ratio
          << " (> 10); the rule-of-thumb K may be too small for this model";
      result_.warnings.push_back(msg.str());
    }
  }

  void initialize() {
    const AttractorSpec attractor = model_.attractor();
    std::vector<InitialValue> init;
    if (attractor.kind == AttractorSpec::Kind::StablePoint) {
      init = init_near_equilibrium(grid_, model_, attractor.point);
    } else {
      const int radius = config_.init_radius_nodes > 0 ? config_.init_radius_nodes : config_.K;
      init = init_from_point_set(grid_, model_, attractor.points, radius);
    }
    for (const InitialValue& v : init) {
      u(v.node) = v.u;
      if (v.label == NodeLabel::AcceptedFront) {
        set_label(v.node, NodeLabel::Considered);
        set_label(v.node, NodeLabel::AcceptedFront);
        result_.accept_order.push_back(v.node);
      } else {
        set_label(v.node, NodeLabel::Considered);
        heap_.insert(v.node, v.u);
        ++result_.stats.heap_inserts;
      }
    }
  }

  bool has_open_neighbor(const Node& c) const {
    bool open = false;
    for_each_neighbor(c, [&](NodeIndex m, std::size_t, std::size_t) {
      open = open || label(m) <= NodeLabel::Considered;
    });
    return open;
  }

  void retire_if_interior(const Node& c) {
    if (label(c.n) == NodeLabel::AcceptedFront && !has_open_neighbor(c)) {
      set_label(c.n, NodeLabel::Accepted);
    }
  }

  void retire_neighbors(const Node& x0) {
    for_each_neighbor(x0, [&](NodeIndex m, std::size_t i, std::size_t j) {
      retire_if_interior(node(m, i, j));
    });
  }

  std::size_t accepted_front_neighbors(const Node& c, std::array<Node, 8>& out) const {
    std::size_t count = 0;
    for_each_neighbor(c, [&](NodeIndex m, std::size_t i, std::size_t j) {
      if (label(m) == NodeLabel::AcceptedFront) out[count++] = node(m, i, j);
    });
    return count;
  }

  /// Best triangle value over (y0, y1, x) for y1 in `partners`, starting from `best`.
  /// `seg` describes the segment [y0, x].
  double best_triangle(const Node& y0, const SegmentData& seg, const std::array<Node, 8>& partners,
                       std::size_t count, const Node& x, double best) {
    const double u0 = result_.u[y0.n];
    const double min_area = 1e-12 * grid_.h() * grid_.h();
    for (std::size_t k = 0; k < count; ++k) {
      const Node& y1 = partners[k];
      const Vec2 e = y1.p - y0.p;
      if (std::fabs(e.x * seg.d.y - e.y * seg.d.x) < min_area) {
        ++result_.stats.degenerate_triangles;
        continue;
      }
      ++result_.stats.triangle_solves;
      const LocalData at1 = midpoint(y1, x);
      const double u1 = result_.u[y1.n];
      // Cheap rejection: most triangles have no interior minimizer. The sign test is
      // repeated inside triangle_update for the few that pass.
      const Vec2 dx = y0.p - y1.p;
      const Vec2 db = at1.drift - seg.b;
      if constexpr (kConstMetric) {
        if (!(triangle_derivative_at_vertex(seg, dx, u1 - u0, db) < 0.0)) continue;
        if (!(triangle_derivative_sign_at_vertex(x.p - y1.p, at1, dx, u1 - u0, db) > 0.0)) continue;
      } else {
        const Mat2 dA = at1.inv_cov - seg.A;
        if (!(triangle_derivative_at_vertex(seg, dx, u1 - u0, db, dA) < 0.0)) continue;
        if (!(triangle_derivative_sign_at_vertex(x.p - y1.p, at1, dx, u1 - u0, db, dA) > 0.0)) {
          continue;
        }
      }
      const TriangleProblem problem{y0.p, y1.p, x.p, u0, u1, seg.b, at1.drift, seg.A, at1.inv_cov,
                                    grid_.h()};
      const TriangleUpdate t = triangle_update(problem, config_.tolerances);
      if (t.status == TriangleUpdate::Status::RootFailure) ++result_.stats.root_failures;
      if (t.updated()) {
        ++result_.stats.triangle_interior;
        if (t.value < best) best = t.value;
      }
    }
    return best;
  }

  void lower(NodeIndex x, double value) {
    if (value < u(x)) {
      u(x) = value;
      heap_.decrease_key(x, value);
      ++result_.stats.heap_decreases;
    }
  }

  /// Step 3: Considered nodes within Kh of the new front node.
  void update_considered_near(const Node& x0) {
    std::array<Node, 8> partners{};
    const std::size_t count = accepted_front_neighbors(x0, partners);
    const double u0 = result_.u[x0.n];
    disk_.for_each_tagged(grid_, tags(), tag(NodeLabel::Considered), x0.i, x0.j,
                          [&](NodeIndex n, std::size_t i, std::size_t j) {
      const Node x = node(n, i, j);
      const SegmentData seg = segment_data(x0.p, x.p, midpoint(x0, x));
      ++result_.stats.one_point_updates;
      double best = u0 + seg.action();
      best = best_triangle(x0, seg, partners, count, x, best);
      lower(n, std::max(best, u0));
    });
  }

  /// Step 4: hierarchical update of the Unknown neighbours of the new front node.
  void promote_unknown_neighbors(const Node& x0) {
    std::array<Node, 8> fresh{};
    std::size_t n_fresh = 0;
    for_each_neighbor(x0, [&](NodeIndex m, std::size_t i, std::size_t j) {
      if (label(m) == NodeLabel::Unknown) fresh[n_fresh++] = node(m, i, j);
    });
    for (std::size_t k = 0; k < n_fresh; ++k) {
      const Node& x = fresh[k];
      set_label(x.n, NodeLabel::Considered);

      // The nearest-neighbour source x0 is always a candidate, even when K = 1
      // excludes diagonal neighbours from the disk.
      Node y0 = x0;
      LocalData at_y0 = midpoint(x0, x);
      double best = result_.u[x0.n] + segment_action(x.p - x0.p, at_y0.inv_cov, at_y0.drift);
      ++result_.stats.one_point_updates;
      disk_.for_each_tagged(grid_, tags(), tag(NodeLabel::AcceptedFront), x.i, x.j,
                            [&](NodeIndex n, std::size_t i, std::size_t j) {
        if (n == x0.n) return;
        const Node y = node(n, i, j);
        const LocalData at = midpoint(y, x);
        ++result_.stats.one_point_updates;
        const double q = result_.u[n] + segment_action(x.p - y.p, at.inv_cov, at.drift);
        if (q < best || (q == best && n < y0.n)) {
          best = q;
          y0 = y;
          at_y0 = at;
        }
      });

      std::array<Node, 8> partners{};
      const std::size_t count = accepted_front_neighbors(y0, partners);
      best = best_triangle(y0, segment_data(y0.p, x.p, at_y0), partners, count, x, best);
      best = std::max(best, result_.u[x0.n]);
      u(x.n) = best;
      heap_.insert(x.n, best);
      ++result_.stats.heap_inserts;
    }
  }

  const ModelT& model_;
  const SolverConfig& config_;
  Grid grid_;
  DiskStencil disk_;
  IndexedMinHeap heap_;
  SolveResult result_;
  std::vector<CacheEntry> cache_;
  Mat2 metric_{};
};

}  // namespace

SolveResult solve(const Model& model, const SolverConfig& config) {
  config.validate();
  if (const auto* m = dynamic_cast<const MaierSteinModel*>(&model)) return Sweep(*m, config).run();
  if (const auto* m = dynamic_cast<const PolarModel*>(&model)) return Sweep(*m, config).run();
  if (const auto* m = dynamic_cast<const LinearModel*>(&model)) return Sweep(*m, config).run();
  if (const auto* m = dynamic_cast<const LambdaPhageModel*>(&model)) return Sweep(*m, config).run();
  return Sweep<Model>(model, config).run();
}

}  // namespace qpot
