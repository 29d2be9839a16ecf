#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qpot/field.hpp"
#include "qpot/model.hpp"
#include "qpot/solver.hpp"

namespace qpot {

/// Ordered polyline with cumulative arc length.
class Path {
 public:
  Path() = default;
  explicit Path(const std::vector<Vec2>& points);

  /// Appends p unless it coincides with the last vertex.
  void append(Vec2 p);
  Path reversed() const;

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<double>& arclength() const { return arclength_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  double length() const { return arclength_.empty() ? 0.0 : arclength_.back(); }
  Vec2 front() const { return vertices_.front(); }
  Vec2 back() const { return vertices_.back(); }

 private:
  std::vector<Vec2> vertices_;
  std::vector<double> arclength_;
};

/// The computed field restricted to accepted nodes; everything else becomes +inf.
ScalarField accepted_field(const SolveResult& result);

/// Central differences where both neighbours are finite, one-sided differences
/// otherwise. Nodes without a finite neighbour in some direction get NaN components.
VectorField gradient_field(const ScalarField& u);

/// Bilinear interpolation on the cell containing p. nullopt if p is outside the mesh
/// or a corner value is not finite.
std::optional<double> interpolate(const ScalarField& field, Vec2 p);
std::optional<Vec2> interpolate(const VectorField& field, Vec2 p);

enum class TraceStatus { ReachedAttractor, MaxSteps, LeftAcceptedRegion, Stalled };
const char* to_string(TraceStatus status);

struct MapTrace {
  Path path;  // from the start point towards the attractor
  TraceStatus status = TraceStatus::MaxSteps;
  std::size_t steps = 0;
};

struct TraceOptions {
  double step = 0.0;          // 0 means h / 2
  std::size_t max_steps = 0;  // 0 means 20 (nx + ny)
  double stop_radius = 0.0;   // 0 means 2 h
};

/// Minimum action path by backward shooting: RK4 on dψ/ds = -v/|v| with
/// v = b + σσᵀ∇U, ∇U interpolated bilinearly from gradient_field(u). Stops near the
/// attractor (a stable point or any sample of a point set).
///
/// Throws DomainError if the start is outside the region where u is finite.
MapTrace trace_map(const ScalarField& u, const Model& model, Vec2 start,
                   const TraceOptions& options = {});
MapTrace trace_map(const ScalarField& u, const VectorField& gradient, const Model& model,
                   Vec2 start, const TraceOptions& options = {});

/// ∇Uᵀσσᵀ∇U + 2 b·∇U at every node with a valid gradient, NaN elsewhere.
ScalarField hj_residual(const ScalarField& u, const Model& model);

struct Decomposition {
  VectorField rotational;  // l = b + ½∇U
  /// The split b = -½∇U + l is orthogonal only for σ = I; set when it is not.
  bool anisotropic_caveat = false;
};
Decomposition decompose_field(const ScalarField& u, const Model& model);

struct ErrorReport {
  double max_abs = 0.0;
  double rms = 0.0;
  double normalized_max_abs = 0.0;  // max_abs / max computed U
  double max_u = 0.0;
  std::size_t n_valid_nodes = 0;
};

/// Errors against the model's exact U over nodes with finite u.
/// Throws std::invalid_argument if the model has no exact solution.
ErrorReport error_report(const ScalarField& u, const Model& model);
/// Same over the accepted nodes of a solve (Considered nodes are excluded).
ErrorReport error_report(const SolveResult& result, const Model& model);

/// |u - U_exact| on finite nodes, NaN elsewhere.
ScalarField error_field(const ScalarField& u, const Model& model);

}  // namespace qpot
