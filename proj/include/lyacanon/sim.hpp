#pragma once

// Numerical integration of original and canonical systems, oracle
// comparisons and parameter sweeps.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyacanon/cascade.hpp"
#include "lyacanon/sysdef.hpp"
#include "lyacanon/trajectory.hpp"

namespace lyacanon {

inline constexpr std::size_t kDefaultSamples = 241;
inline constexpr double kDefaultSpan = 12.0;

struct IntegrateOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Output times inside [t0, tf]; empty means kDefaultSamples uniform points.
  std::vector<double> sample_times;
  std::size_t max_steps = 500000;
};

/// An explicit ODE dx/dt = rhs(t, x; context) with optional domain guards.
struct OdeProblem {
  std::vector<Expr> rhs;
  std::vector<std::string> states;
  std::vector<std::string> context_names;
  std::vector<double> context_values;
  std::vector<Expr> guards;  // each must stay > 0
};

/// Dormand-Prince 5(4) with step-size control and dense output. Throws
/// DomainError when x0 is outside the domain and IntegrationError when the
/// step size underflows (e.g. at a domain boundary).
Trajectory integrate(const OdeProblem& problem, double t0, double tf, const StatePoint& x0,
                     const IntegrateOptions& options = {});

/// Original system from x0 at its t0; c = g(t0, x0) and drift are filled in.
/// Drift is taken against `c` when given, else against g(t0, x0). An integral
/// that is undefined at every sample reports NaN drift.
Trajectory integrate_original(const SystemDef& s, const StatePoint& x0, const ParamPoint& xi,
                              double tf, const IntegrateOptions& options = {},
                              const LevelVec* c = nullptr);

/// Canonical system from y0 at t0 for fixed (c, xi).
Trajectory integrate_canonical(const CanonicalSystem& cs, const StatePoint& y0, const LevelVec& c,
                               const ParamPoint& xi, double tf,
                               const IntegrateOptions& options = {});

/// max over output times of ||state(t) - oracle(t)||_inf. The oracle may
/// use t and the trajectory's context.
double compare_to_oracle(const Trajectory& traj, std::span<const Expr> oracle);

/// The integral curve through level c as closed-form functions of t:
/// forward_map evaluated at y = 0.
std::vector<Expr> zero_trajectory_oracle(const CanonicalSystem& cs);

struct CrossCheck {
  double max_deviation = 0.0;
  Trajectory y;
  Trajectory x;
};

/// Integrates the canonical system from y0 and the original system from
/// decanonize(t0, y0); reports max ||decanonize(t, y(t)) - x(t)||_inf.
CrossCheck cross_coordinate_check(const SystemDef& s, const CanonicalSystem& cs, const LevelVec& c,
                                  const ParamPoint& xi, const StatePoint& y0, double tf,
                                  const IntegrateOptions& options = {});

struct SweepPoint {
  LevelVec c;
  ParamPoint xi;
  bool ok = false;
  std::string error;
  StatePoint initial;
  StatePoint final_state;
  double max_drift = 0.0;    // original space
  double decay_ratio = 0.0;  // canonical space: ||y(T)|| / ||y(0)||
  Trajectory trajectory;
};

struct SweepResult {
  Space space = Space::Original;
  std::vector<std::string> state_names;
  std::vector<std::string> level_names;
  std::vector<SweepPoint> points;  // xi-major, then c
};

/// One original-space run per (c, xi): x0 = psi(t0, c, xi), with the Newton
/// guess taken from the canonizing map at y = 0 when `guide` is given.
SweepResult sweep_original(const SystemDef& s, const CanonicalSystem* guide,
                           std::span<const LevelVec> c_grid, std::span<const ParamPoint> xi_grid,
                           double tf, const IntegrateOptions& options = {});

/// One canonical run from y0 per (c, xi).
SweepResult sweep_canonical(const CanonicalSystem& cs, const StatePoint& y0,
                            std::span<const LevelVec> c_grid, std::span<const ParamPoint> xi_grid,
                            double tf, const IntegrateOptions& options = {});

}  // namespace lyacanon
