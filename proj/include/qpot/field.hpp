#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "qpot/grid.hpp"
#include "qpot/linalg.hpp"

namespace qpot {

/// A quantity sampled at every node of a grid, stored row-major (index i + j * nx).
template <typename T>
struct Field {
  Grid grid;
  std::vector<T> values;

  Field(const Grid& g, T fill) : grid(g), values(g.size(), fill) {}

  T& operator[](NodeIndex n) { return values[n]; }
  const T& operator[](NodeIndex n) const { return values[n]; }
  T& at(std::size_t i, std::size_t j) { return values[grid.index(i, j)]; }
  const T& at(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }
};

using ScalarField = Field<double>;
using VectorField = Field<Vec2>;
using LabelField = Field<NodeLabel>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline bool is_valid(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

}  // namespace qpot
