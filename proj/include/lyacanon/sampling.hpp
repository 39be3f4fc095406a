#pragma once

// Sample grids shared by the numeric checks.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyacanon/expr.hpp"

namespace lyacanon {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/// Evenly spaced points including both ends; count 1 yields the midpoint.
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Evenly spaced points strictly inside (lo, hi).
std::vector<double> interior_points(double lo, double hi, std::size_t count);

/// A finite set of points over named coordinates.
struct SampleGrid {
  std::vector<std::string> names;
  std::vector<std::vector<double>> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  /// Position of `name` in `names`, if present.
  std::optional<std::size_t> index_of(std::string_view name) const;

  Binding binding(std::size_t i) const;

  /// Cartesian product in lexicographic order (last axis fastest).
  static SampleGrid cartesian(const std::vector<std::pair<std::string, std::vector<double>>>& axes);

  /// Product of two grids over disjoint names.
  static SampleGrid product(const SampleGrid& a, const SampleGrid& b);

  /// Deterministic uniform samples inside per-coordinate intervals.
  static SampleGrid uniform(const std::vector<std::pair<std::string, Interval>>& box,
                            std::size_t count, std::uint64_t seed);

  /// Copy with coordinate `name` set to `value` in every point (added if absent).
  SampleGrid with_fixed(std::string_view name, double value) const;

  /// Values of the grid's coordinates arranged for `slots`; missing names throw.
  std::vector<std::size_t> slot_map(std::span<const std::string> slots) const;
};

/// Default grid of the expression kernel: `count` seeded uniform points with
/// every free variable of `exprs` drawn from [0.25, 2].
SampleGrid default_grid(std::span<const Expr> exprs, std::size_t count = 256,
                        std::uint64_t seed = 0);

struct EquivalenceResult {
  bool equivalent = false;
  double max_abs_diff = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::optional<Binding> witness;
};

/// Compares a and b pointwise over the grid. Points where either side is
/// outside its domain are skipped; DomainError if every point is skipped.
EquivalenceResult equiv_sample(const Expr& a, const Expr& b, const SampleGrid& grid,
                               double tol);

/// equiv_sample against Constant 0 at tolerance 1e-9 on `grid`.
bool is_numerically_zero(const Expr& e, const SampleGrid& grid, double tol = 1e-9);

}  // namespace lyacanon
