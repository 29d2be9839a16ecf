#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qpot/action.hpp"
#include "qpot/field.hpp"
#include "qpot/grid.hpp"
#include "qpot/model.hpp"

namespace qpot {

/// Memoization of model data on the half-step mesh where update midpoints lie.
/// Auto enables it when the table fits in 512 MiB, or 128 MiB for models with constant
/// diffusion, where only the drift is stored.
enum class MidpointCache { Auto, On, Off };

struct SolverConfig {
  std::size_t nx = 256;
  std::size_t ny = 256;
  int K = 14;
  Domain domain;
  BoundaryPolicy boundary_policy = BoundaryPolicy::StopOnBoundary;
  /// Radius, in units of h, of the point-set initialization. 0 means K.
  int init_radius_nodes = 0;
  TriangleTolerances tolerances;
  MidpointCache midpoint_cache = MidpointCache::Auto;
  /// Called on every label change as (node, old label, new label). Meant for tests
  /// and tracing; leave empty in production runs.
  std::function<void(NodeIndex, NodeLabel, NodeLabel)> observer;

  /// Throws std::invalid_argument unless K >= 1, nx, ny >= 16 and the domain is valid.
  void validate() const;

  /// Convenience: N x N nodes over the model's default domain and boundary policy.
  static SolverConfig for_model(const Model& model, std::size_t N, int K);
};

struct SolverStats {
  std::uint64_t heap_inserts = 0;
  std::uint64_t heap_decreases = 0;
  std::uint64_t heap_extractions = 0;
  std::uint64_t one_point_updates = 0;
  std::uint64_t triangle_solves = 0;     // nondegenerate triangles examined
  std::uint64_t triangle_interior = 0;   // of those, interior minimizers found
  std::uint64_t root_failures = 0;
  std::uint64_t degenerate_triangles = 0;
  double wall_seconds = 0.0;
  bool reached_boundary = false;
  double max_anisotropy = 1.0;  // largest λmax/λmin of A seen on a coarse sample
};

struct SolveResult {
  ScalarField u;
  LabelField labels;
  std::vector<NodeIndex> accept_order;
  SolverStats stats;
  std::vector<std::string> warnings;

  /// Accepted or AcceptedFront.
  bool accepted(NodeIndex n) const { return labels[n] >= NodeLabel::AcceptedFront; }
};

/// One initialized node.
struct InitialValue {
  NodeIndex node;
  double u;
  NodeLabel label;  // Considered, or AcceptedFront for an attractor lying on a node
};

/// Quadratic start around a stable equilibrium: U = (x - x₀)ᵀM(x - x₀) on the four
/// corners of the cell containing x₀, or on its eight neighbours when x₀ is a node
/// (the node itself then starts at U = 0).
///
/// Throws InitializationError if x₀ is outside the domain or J(x₀) is not stable.
std::vector<InitialValue> init_near_equilibrium(const Grid& grid, const Model& model,
                                                Vec2 equilibrium);

/// Start from sampled attractor points: each node within radius_nodes * h of a sample
/// gets the smallest single-segment action from the samples in range.
///
/// Throws InitializationError if fewer than 2 samples are given or no node is in range.
std::vector<InitialValue> init_from_point_set(const Grid& grid, const Model& model,
                                              const std::vector<Vec2>& samples, int radius_nodes);

/// Runs the label-setting sweep with the hierarchical update.
///
/// Under StopOnBoundary nodes still Considered at termination keep their tentative
/// values in `u` and keep the Considered label.
SolveResult solve(const Model& model, const SolverConfig& config);

/// round(10 + 4 (log2 N - 7)), at least 1.
int rule_of_thumb_K(std::size_t N);

/// Largest λmax/λmin of A over a coarse sample of the domain; points where the model
/// is undefined are skipped.
double sample_anisotropy(const Model& model, const Domain& domain, int samples_per_axis = 33);

}  // namespace qpot
