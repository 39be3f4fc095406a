#pragma once

// End-to-end runs shared by the command-line tool and the Python bindings.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lyacanon/cascade.hpp"
#include "lyacanon/plot.hpp"
#include "lyacanon/sim.hpp"
#include "lyacanon/stability.hpp"
#include "lyacanon/sysdef.hpp"

namespace lyacanon {

struct PipelineConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t grid_t = 25;  // time samples of the grid checks
  std::size_t grid_y = 9;   // interior samples per y axis
  double xi_box_scale = 1.0;
  std::size_t xi_per_axis = 3;
  std::uint64_t seed = 0;
  int s_max = 5;
  LyapunovSpec lyapunov;
  /// Level points for curves and plots; unset means the file's curves (or
  /// the level box vertices and centre when the file lists none).
  std::optional<std::vector<LevelVec>> curves;
  bool oracle = false;

  /// Throws Error when a setting is out of range.
  void validate(std::size_t n) const;
  /// True when the integrator tolerances are looser than the defaults.
  bool loosened() const;
  /// Accuracy required of integrated trajectories.
  double trajectory_tol() const;
};

CascadeOptions cascade_options(const PipelineConfig& cfg);
StabilityGridSpec stability_spec(const PipelineConfig& cfg);
IntegrateOptions integrate_options(const PipelineConfig& cfg);

/// Level box vertices and centre.
std::vector<LevelVec> omega_points(const CanonicalSystem& cs);
/// `per_axis` values per parameter over the box scaled about its nominal point.
std::vector<ParamPoint> xi_scan_points(const ParamBox& box, double scale, std::size_t per_axis);
/// Perturbed initial states for the canonical trajectory checks.
std::vector<StatePoint> default_perturbations(std::size_t n);
std::vector<LevelVec> curve_points(const SystemDef& s, const PipelineConfig& cfg);

struct CanonicalChecks {
  std::vector<FlatnessResult> flatness;
  RoundTripResult round_trip;
  ConvergenceReport convergence;
  bool ok = false;  // flatness and round trip
};

CanonicalChecks check_canonical(const CanonicalSystem& cs, const PipelineConfig& cfg);

struct StabilityReport {
  ParamPoint xi_hat;
  std::vector<LevelVec> omega;
  CriterionReport components;  // over omega at xi_hat
  LyapunovReport lyapunov;
  std::vector<std::string> trajectory_errors;
  RegionScan scan;
  bool ok = false;
};

StabilityReport assess_stability(const CanonicalSystem& cs, const PipelineConfig& cfg);

struct NamedPlot {
  std::string file;
  PlotData data;
};

struct SimulationReport {
  std::vector<LevelVec> curves;
  SweepResult original;
  SweepResult canonical;  // from default_perturbations()[0] over omega
  std::vector<double> oracle_deviation;  // per curve, when requested
  double oracle_tol = 0.0;
  double max_drift = 0.0;
  double max_decay_ratio = 0.0;
  std::vector<NamedPlot> plots;
  bool ok = false;
};

SimulationReport simulate(const SystemDef& s, const CanonicalSystem& cs, const PipelineConfig& cfg);

/// Writes every plot of the report into `dir`.
void write_plots(const SimulationReport& rep, const std::filesystem::path& dir);

}  // namespace lyacanon
