#pragma once

#include <cstddef>
#include <vector>

#include "lyacanon/expr.hpp"
#include "lyacanon/sysdef.hpp"

namespace lyacanon {

enum class Space { Original, Canonical };

/// Sampled solution of one ODE system for fixed (c, xi).
struct Trajectory {
  Space space = Space::Original;
  std::vector<double> times;  // output grid, times[0] = t0
  std::vector<StatePoint> states;
  /// Every accepted integrator step (t, state), starting at t0.
  std::vector<double> step_times;
  std::vector<StatePoint> step_states;
  LevelVec c;
  ParamPoint xi;
  /// c and xi by name, for evaluating expressions along the trajectory.
  Binding context;
  /// Per-integral max |g_i(t, x(t); xi) - c_i|; x-space only.
  std::vector<double> drift;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

}  // namespace lyacanon
