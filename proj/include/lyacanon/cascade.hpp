#pragma once

// Flattening cascade: one substitution x_k = y_k + phi_k per component maps
// the level set of the k-th first integral onto the plane {y_k = 0}. After
// all n stages the system is in canonical form, where y = 0 is the image of
// every integral curve.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyacanon/expr.hpp"
#include "lyacanon/sampling.hpp"
#include "lyacanon/sysdef.hpp"

namespace lyacanon {

enum class SolveSource { UserForm, AutoLinear, AutoSquare };
std::string_view to_string(SolveSource s);

struct ZeroCheck {
  bool ok = false;
  double max_abs = 0.0;
  std::size_t evaluated = 0;
  std::optional<Binding> witness;
};

struct CascadeStage {
  std::size_t k = 0;          // 1-based stage number
  std::size_t component = 0;  // 0-based component flattened by this stage
  Expr phi;                   // x_component = y_component + phi
  SolveSource source = SolveSource::UserForm;
  ZeroCheck residual_check;   // g^{k-1}(x_component = phi) - c == 0
};

/// System state between stages. After stage k the coordinates are the
/// canonical y for flattened components and the original x for the rest.
struct CascadeState {
  std::size_t completed = 0;
  std::vector<std::string> coords;
  std::vector<Expr> rhs;
  std::vector<Expr> integrals;
  std::vector<Expr> forward;  // original x_i in current coordinates
  std::vector<bool> flattened;
};

struct CascadeOptions {
  /// Stage order as 0-based component indices; empty means declaration order.
  std::vector<std::size_t> order;
  /// Random sample count for the numeric identity checks.
  std::size_t samples = 600;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  /// Sampling half-range for already flattened y coordinates.
  double y_range = 0.3;
  double t_span = 12.0;
};

struct CanonicalSystem {
  std::size_t n = 0;
  std::size_t m = 0;
  double t0 = 0.0;
  std::vector<std::string> state_names;  // original coordinates x
  std::vector<std::string> canon_names;  // y1..yn
  std::vector<std::string> level_names;  // c1..cn
  std::vector<std::string> param_names;
  std::vector<Expr> rhs_canon;    // f^n(t, y; c, xi)
  std::vector<Expr> forward_map;  // x(t, y; c, xi)
  std::vector<Expr> inverse_map;  // y(t, x; c, xi)
  std::vector<Expr> guards;       // original domain guards in canonical coordinates
  std::vector<Expr> original_guards;
  std::vector<CascadeStage> stages;
  ParamBox param_box;
  ParamBox level_box;

  /// t, y..., c..., xi...
  std::vector<std::string> canon_slots() const;
  /// t, x..., c..., xi...
  std::vector<std::string> original_slots() const;
};

CascadeState initial_cascade_state(const SystemDef& s);

/// Random sample grid over every coordinate a stage expression can mention.
SampleGrid stage_sample_grid(const SystemDef& s, const CascadeState& state,
                             const CascadeOptions& options);

/// Solves the transformed integral of the next component for that component.
/// Throws UnsolvableComponent when neither the solved form nor the linear /
/// square patterns apply, or when the residual check fails.
CascadeStage derive_stage(const SystemDef& s, const CascadeState& state, std::size_t component,
                          const CascadeOptions& options = {});

/// Applies x_c = y_c + phi: the other right-hand sides are substituted; the
/// flattened component becomes f_c(theta) - dphi/dt - sum_j dphi/dz_j * f_j
/// over the remaining coordinates z_j, using the already transformed f_j.
CascadeState apply_stage(const CascadeStage& stage, const CascadeState& state);

CanonicalSystem build_canonical(const SystemDef& s, const CascadeOptions& options = {});

/// y = inverse_map(t, x; c, xi); throws DomainError off the domain.
StatePoint canonize_point(const CanonicalSystem& cs, double t, const StatePoint& x,
                          const LevelVec& c, const ParamPoint& xi);
/// x = forward_map(t, y; c, xi); throws DomainError off the domain.
StatePoint decanonize_point(const CanonicalSystem& cs, double t, const StatePoint& y,
                            const LevelVec& c, const ParamPoint& xi);

/// Grid layout used by the canonical checks.
struct CanonicalGridSpec {
  std::size_t t_points = 13;
  double t_span = 12.0;
  std::size_t y_points = 7;
  Interval y_box{-0.4, 1.4};
  std::vector<LevelVec> c_points;     // empty: level box vertices and centre
  std::vector<ParamPoint> xi_points;  // empty: nominal parameters
};

/// Cartesian grid over t, y, c and xi (t outermost).
SampleGrid canonical_grid(const CanonicalSystem& cs, const CanonicalGridSpec& spec = {});

struct FlatnessResult {
  std::size_t component = 0;
  double max_abs = 0.0;
  std::size_t evaluated = 0;
  std::optional<Binding> witness;
  bool ok = false;
};

/// max |f_i| over the grid restricted to y_i = 0, per component.
std::vector<FlatnessResult> verify_flatness(const CanonicalSystem& cs, const SampleGrid& grid,
                                            double tol = 1e-9);

struct RoundTripResult {
  double max_abs = 0.0;
  std::size_t evaluated = 0;
  bool ok = false;
};

/// canonize(decanonize(y)) == y on the valid points of the grid.
RoundTripResult verify_round_trip(const CanonicalSystem& cs, const SampleGrid& grid,
                                  double tol = 1e-8);

struct ConvergenceReport {
  std::vector<double> radii;    // ascending, starting at 0
  std::vector<double> sup_gap;  // non-decreasing in radius
  double lipschitz = 0.0;       // fitted K with sup_gap(r) <= K r
  double horizon_ratio = 0.0;   // K over the full window / K over its first half
  bool monotone = false;
  bool verdict = false;         // evidence of uniform convergence
};

struct ConvergenceOptions {
  std::vector<double> radii{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::size_t t_points = 25;
  double t_span = 12.0;
  std::vector<LevelVec> c_points;
  std::vector<ParamPoint> xi_points;
  double max_horizon_ratio = 2.0;
};

/// Samples sup ||forward(t, y) - forward(t, 0)|| over ||y|| <= r for each
/// radius and tests that the gap shrinks linearly with r uniformly in time.
ConvergenceReport check_uniform_convergence(const CanonicalSystem& cs,
                                            const ConvergenceOptions& options = {});
ConvergenceReport check_uniform_convergence(const CanonicalSystem& cs,
                                            std::span<const Expr> forward,
                                            const ConvergenceOptions& options);

}  // namespace lyacanon
