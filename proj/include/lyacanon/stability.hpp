#pragma once

// Stability evidence for canonical systems: the derivative-rank criterion,
// the sign pattern of each canonical component around its zero plane,
// canonical Lyapunov functions, and scans over level and parameter grids.
// Every verdict here is sampled evidence, not a proof.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyacanon/cascade.hpp"
#include "lyacanon/trajectory.hpp"

namespace lyacanon {

struct LyapunovSpec {
  std::vector<double> weights;  // a_i > 0; empty means all 1
  int exponent = 2;             // even, >= 2
  double lambda = 1.0;          // >= 1

  /// Throws Error when an invariant is violated or weights have the wrong size.
  void validate(std::size_t n) const;
};

enum class Parity { Odd, Even };
enum class ComponentVerdict { StableEvidence, Inconclusive, UnstableEvidence, Degenerate };

std::string_view to_string(Parity p);
std::string_view to_string(ComponentVerdict v);

/// Sign agreement required before a sign is reported.
inline constexpr double kSignAgreement = 0.999;
/// Threshold below which a sampled derivative counts as zero.
inline constexpr double kRankZeroTol = 1e-9;

struct RankResult {
  bool degenerate = false;  // every order up to s_max vanishes
  int rank = 0;             // s-bar, valid unless degenerate
  Parity parity = Parity::Odd;
  std::optional<int> sign;  // -1 or +1 when constant on the grid
  double agreement = 0.0;   // share of valid points with the majority sign
  double max_abs = 0.0;     // of the rank derivative
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t evaluated = 0;
  Expr derivative;          // d^s f_i / dy_i^s restricted to y_i = 0
};

/// s-bar of component i (0-based) over `grid`, which must bind the canonical
/// slots; y_i is forced to 0. Points outside the domain are skipped.
RankResult classificational_rank(const CanonicalSystem& cs, std::size_t i, const SampleGrid& grid,
                                 int s_max = 5);

struct AmapResult {
  bool positive = false;
  std::size_t violations = 0;
  std::size_t evaluated = 0;
  double worst = 0.0;  // largest violation magnitude
  std::optional<Binding> witness;
};

/// Zero on {y_i = 0}, negative above, positive below, at every valid point.
AmapResult a_mapping_check(const CanonicalSystem& cs, std::size_t i, const SampleGrid& grid,
                           double zero_tol = 1e-9);

/// Sampling layout for the criterion, A-map and Lyapunov checks.
struct StabilityGridSpec {
  std::size_t t_points = 25;
  double t_span = 12.0;
  /// Interior samples per y axis of the A-map box (0 is always added).
  std::size_t y_points = 9;
  Interval amap_box{-0.5, 1.5};
  Interval lyapunov_box{-0.4, 1.4};
  std::size_t lyapunov_y_points = 10;
};

/// Grid over t, y and the listed (c, xi) combinations; y axes take the
/// interior points of `box` plus 0.
SampleGrid stability_grid(const CanonicalSystem& cs, std::span<const LevelVec> c_points,
                          std::span<const ParamPoint> xi_points, const StabilityGridSpec& spec,
                          Interval box, std::size_t y_points);

struct ComponentReport {
  std::size_t component = 0;
  RankResult rank;
  AmapResult amap;
  ComponentVerdict verdict = ComponentVerdict::Inconclusive;
};

struct CriterionReport {
  std::vector<ComponentReport> components;
  bool stable() const;
};

/// Rank and A-map analysis of every component over the given (c, xi) points.
CriterionReport analyze_components(const CanonicalSystem& cs, std::span<const LevelVec> c_points,
                                   std::span<const ParamPoint> xi_points,
                                   const StabilityGridSpec& spec = {}, int s_max = 5);

/// Rank 1 with negative sign is stable evidence; a higher odd rank with
/// negative sign also needs a positive A-map. Odd rank with positive sign is
/// unstable evidence.
ComponentVerdict component_verdict(const RankResult& rank, const AmapResult& amap);

struct LyapunovFunctions {
  Expr W;
  Expr V;
};

/// W = sum a_i y_i^l, V = W (lambda + exp(-t)).
LyapunovFunctions build_lyapunov(const LyapunovSpec& spec, std::size_t n);

/// dV/dt = dV/dt + sum dV/dy_i f_i along the canonical system.
Expr lyapunov_derivative(const CanonicalSystem& cs, const Expr& V);

struct MonotonicityStats {
  StatePoint y0;
  LevelVec c;
  ParamPoint xi;
  std::size_t steps = 0;
  std::size_t violations = 0;
  double max_increase = 0.0;  // largest W(k+1) - W(k) among violating steps
  double final_norm = 0.0;
  bool ok = false;
};

struct LyapunovReport {
  Expr W;
  Expr V;
  Expr dVdt;
  double min_V = 0.0;     // over sampled points with ||y|| >= exclusion radius
  double max_dVdt = 0.0;  // same points
  std::size_t evaluated = 0;
  std::size_t v_violations = 0;
  std::size_t dvdt_violations = 0;
  std::optional<Binding> witness;
  std::vector<MonotonicityStats> trajectories;
  bool verified = false;
};

/// Radius around y = 0 excluded from the sampled sign checks.
inline constexpr double kOriginExclusion = 1e-6;
/// Below this norm W is no longer required to decrease along trajectories.
inline constexpr double kTrajectoryFloor = 1e-9;

/// Checks V > 0 and dV/dt < 0 on `grid` (canonical slots) and strict decrease
/// of W along each canonical trajectory.
LyapunovReport verify_lyapunov(const CanonicalSystem& cs, const LyapunovSpec& spec,
                               const SampleGrid& grid, std::span<const Trajectory> trajectories);

struct ScanPoint {
  LevelVec c;
  ParamPoint xi;
  std::vector<ComponentVerdict> components;
  std::vector<int> ranks;  // 0 when degenerate
  bool stable = false;     // per-curve verdict
};

struct SystemVerdict {
  ParamPoint xi;
  std::size_t curves = 0;
  std::size_t failing = 0;
  bool stable = false;
};

struct RegionScan {
  std::vector<ScanPoint> per_curve;  // xi-major, then c, in grid order
  std::vector<SystemVerdict> per_system;
  bool inclusion = false;
  std::string label = "evidence, not proof";
};

/// Per-curve criterion for every (c, xi) combination, aggregated by
/// conjunction per parameter point and over the whole grid.
RegionScan scan_region(const CanonicalSystem& cs, std::span<const ParamPoint> xi_grid,
                       std::span<const LevelVec> c_grid, const StabilityGridSpec& spec = {},
                       int s_max = 5);

}  // namespace lyacanon
