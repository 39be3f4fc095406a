#pragma once

// System definitions: right-hand sides, first integrals, solved forms,
// parameter/level domains, and the correspondence between level constants
// and initial states.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lyacanon/expr.hpp"
#include "lyacanon/program.hpp"
#include "lyacanon/sampling.hpp"

namespace lyacanon {

using StatePoint = std::vector<double>;
using ParamPoint = std::vector<double>;
using LevelVec = std::vector<double>;

/// Per-coordinate closed intervals with an optional distinguished point.
struct ParamBox {
  std::vector<std::string> names;
  std::vector<Interval> ranges;
  std::optional<std::vector<double>> hat;

  std::size_t size() const noexcept { return names.size(); }
  /// Throws Error when lo > hi or hat lies outside the box.
  void validate() const;
  bool contains(std::span<const double> p) const;
  /// hat if present, otherwise the box centre.
  std::vector<double> nominal() const;
  std::vector<double> center() const;
  /// All 2^k vertices followed by the centre.
  std::vector<std::vector<double>> vertices_and_center() const;
  /// `per_axis` evenly spaced values per coordinate (lexicographic order).
  std::vector<std::vector<double>> grid(std::size_t per_axis) const;
  /// Box scaled about `nominal()` by `factor`.
  ParamBox scaled(double factor) const;
};

/// x_i expressed through t, the other states, c_i and the parameters.
struct SolvedForm {
  std::size_t index = 0;  // 0-based component
  Expr expr;
};

struct SystemDef {
  std::size_t n = 0;
  std::size_t m = 0;
  double t0 = 0.0;
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  std::vector<Expr> rhs;
  std::vector<Expr> integrals;
  std::vector<std::optional<SolvedForm>> solved_forms;  // one slot per component
  ParamBox param_box;
  ParamBox level_box;
  ParamBox state_box;
  std::vector<Expr> domain_guards;  // each required > 0
  /// Named level points used for integral curves and plots, in file order.
  std::vector<LevelVec> curves;
  std::vector<std::string> warnings;

  /// "c1".."cn".
  std::vector<std::string> level_names() const;
  /// t, states..., params...
  std::vector<std::string> point_slots() const;

  /// Checks dimensions and free-variable sets; throws on violation.
  void validate() const;
};

/// Name of the time variable in every expression.
inline constexpr std::string_view kTimeVar = "t";

/// Reads and validates a system definition file.
SystemDef load_system(const std::filesystem::path& path);
/// Parses system definition text; `origin` is used in error messages.
SystemDef parse_system(std::string_view text, std::string_view origin = "<string>");

/// The example system shipped with the toolkit.
std::string_view bundled_example_text();
SystemDef bundled_example();

struct IntegralCheck {
  std::string name;
  double max_abs_lie = 0.0;
  std::optional<Binding> witness;
  bool ok = false;
};

struct IntegralValidation {
  bool ok = false;
  std::vector<IntegralCheck> integrals;
  double rank_fraction = 0.0;  // share of valid points with full Jacobian rank
  std::size_t valid_points = 0;
  std::size_t skipped_points = 0;
};

/// Grid over (t, states) for fixed parameters: `per_axis` values per
/// coordinate, t in [t0, t0 + span], states over the state box.
SampleGrid validation_grid(const SystemDef& s, const ParamPoint& xi, std::size_t per_axis = 10,
                           double span = 12.0);

/// Lie derivatives of every integral along rhs must stay within `tol`; the
/// Jacobian dg/dx must have numeric rank n on at least 95% of valid points.
IntegralValidation validate_integrals(const SystemDef& s, const SampleGrid& grid,
                                      double tol = 1e-8);

/// True when every domain guard is positive at (t, x, xi).
bool guards_hold(const SystemDef& s, double t, const StatePoint& x, const ParamPoint& xi);

/// c_i = g_i(t0, x0; xi).
LevelVec c_from_x0(const SystemDef& s, const StatePoint& x0, const ParamPoint& xi);

struct NewtonOptions {
  double tol = 1e-10;
  std::size_t max_iter = 50;
  double max_condition = 1e12;
};

/// Solves g(t0, x; xi) = c for x by damped Newton iteration from `guess`.
/// When that fails and every component has a solved form, x = phi(t0, x; c, xi)
/// is solved instead and accepted if the integrals defined there match c.
StatePoint psi_solve(const SystemDef& s, const LevelVec& c, const ParamPoint& xi,
                     const StatePoint& guess, const NewtonOptions& options = {});

enum class DistanceMode { Constant, Infimum };

/// Distance between the leaves of component `i` (0-based) at levels c_a and
/// c_b. Infimum mode minimises |phi_i(c_a) - phi_i(c_b)| over `grid` of the
/// remaining states at (t0, xi).
double leaf_distance(const SystemDef& s, std::size_t i, double c_a, double c_b, DistanceMode mode,
                     const ParamPoint& xi = {}, const SampleGrid& grid = {});

/// Grid over the states other than component i, `per_axis` values each.
SampleGrid leaf_grid(const SystemDef& s, std::size_t i, std::size_t per_axis = 11);

}  // namespace lyacanon
