#include "lyacanon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lyacanon {

void PipelineConfig::validate(std::size_t n) const {
  auto tol_ok = [](double v) { return v >= 1e-14 && v <= 1e-2; };
  if (!tol_ok(rel_tol)) throw Error("relative tolerance must lie in [1e-14, 1e-2]");
  if (!tol_ok(abs_tol)) throw Error("absolute tolerance must lie in [1e-14, 1e-2]");
  if (grid_t < 2) throw Error("time grid needs at least 2 points");
  if (grid_y < 1) throw Error("y grid needs at least 1 point");
  if (!(xi_box_scale >= 0) || !std::isfinite(xi_box_scale)) {
    throw Error("parameter box scale must be non-negative");
  }
  if (xi_per_axis < 1) throw Error("parameter scan needs at least 1 point per axis");
  if (s_max < 1) throw Error("derivative order cap must be >= 1");
  lyapunov.validate(n);
  if (curves) {
    for (const auto& c : *curves) {
      if (c.size() != n) throw Error("curve level points must have " + std::to_string(n) + " values");
    }
  }
}

bool PipelineConfig::loosened() const { return rel_tol > 1e-8 || abs_tol > 1e-10; }

double PipelineConfig::trajectory_tol() const { return loosened() ? 1e-3 : 1e-6; }

CascadeOptions cascade_options(const PipelineConfig& cfg) {
  CascadeOptions o;
  o.seed = cfg.seed;
  return o;
}

StabilityGridSpec stability_spec(const PipelineConfig& cfg) {
  StabilityGridSpec g;
  g.t_points = cfg.grid_t;
  g.y_points = cfg.grid_y;
  g.lyapunov_y_points = cfg.grid_y + 1;
  return g;
}

IntegrateOptions integrate_options(const PipelineConfig& cfg) {
  IntegrateOptions o;
  o.rel_tol = cfg.rel_tol;
  o.abs_tol = cfg.abs_tol;
  return o;
}

std::vector<LevelVec> omega_points(const CanonicalSystem& cs) {
  return cs.level_box.vertices_and_center();
}

std::vector<ParamPoint> xi_scan_points(const ParamBox& box, double scale, std::size_t per_axis) {
  if (box.size() == 0) return {ParamPoint{}};
  return box.scaled(scale).grid(per_axis);
}

std::vector<StatePoint> default_perturbations(std::size_t n) {
  std::vector<StatePoint> out;
  auto add = [&](StatePoint p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
  };
  StatePoint base(n, 0.2);
  if (n > 0) base[0] = 0.3;
  add(base);
  StatePoint p = base;
  if (n > 0) p[0] = -p[0];
  add(p);
  p = base;
  for (std::size_t i = 1; i < n; ++i) p[i] = -p[i];
  add(p);
  p.assign(n, -0.3);
  if (n > 0) p[0] = -0.2;
  add(p);
  for (std::size_t i = 0; i < n; ++i) p[i] = i % 2 == 0 ? 0.1 : -0.1;
  add(p);
  return out;
}

std::vector<LevelVec> curve_points(const SystemDef& s, const PipelineConfig& cfg) {
  if (cfg.curves) return *cfg.curves;
  if (!s.curves.empty()) return s.curves;
  return s.level_box.vertices_and_center();
}

CanonicalChecks check_canonical(const CanonicalSystem& cs, const PipelineConfig& cfg) {
  CanonicalChecks r;
  CanonicalGridSpec spec;
  spec.t_points = std::max<std::size_t>(cfg.grid_t / 2 + 1, 2);
  spec.y_points = cfg.grid_y;
  const SampleGrid grid = canonical_grid(cs, spec);
  r.flatness = verify_flatness(cs, grid);
  r.round_trip = verify_round_trip(cs, grid);
  ConvergenceOptions conv;
  conv.t_points = cfg.grid_t;
  r.convergence = check_uniform_convergence(cs, conv);
  r.ok = r.round_trip.ok && std::all_of(r.flatness.begin(), r.flatness.end(),
                                        [](const FlatnessResult& f) { return f.ok; });
  return r;
}

StabilityReport assess_stability(const CanonicalSystem& cs, const PipelineConfig& cfg) {
  cfg.validate(cs.n);
  StabilityReport rep;
  rep.xi_hat = cs.param_box.nominal();
  rep.omega = omega_points(cs);
  const StabilityGridSpec spec = stability_spec(cfg);
  const std::vector<ParamPoint> hat{rep.xi_hat};

  rep.components = analyze_components(cs, rep.omega, hat, spec, cfg.s_max);

  const SampleGrid lgrid =
      stability_grid(cs, rep.omega, hat, spec, spec.lyapunov_box, spec.lyapunov_y_points);
  std::vector<Trajectory> trajectories;
  const IntegrateOptions io = integrate_options(cfg);
  for (const auto& c : rep.omega) {
    for (const auto& y0 : default_perturbations(cs.n)) {
      try {
        // Starting points outside the domain are not part of the check.
        decanonize_point(cs, cs.t0, y0, c, rep.xi_hat);
      } catch (const DomainError&) {
        continue;
      }
      try {
        trajectories.push_back(
            integrate_canonical(cs, y0, c, rep.xi_hat, cs.t0 + kDefaultSpan, io));
      } catch (const Error& e) {
        rep.trajectory_errors.push_back(e.what());
      }
    }
  }
  rep.lyapunov = verify_lyapunov(cs, cfg.lyapunov, lgrid, trajectories);

  const auto xi_grid = xi_scan_points(cs.param_box, cfg.xi_box_scale, cfg.xi_per_axis);
  rep.scan = scan_region(cs, xi_grid, rep.omega, spec, cfg.s_max);

  rep.ok = rep.components.stable() && rep.lyapunov.verified && rep.trajectory_errors.empty() &&
           rep.scan.inclusion;
  return rep;
}

SimulationReport simulate(const SystemDef& s, const CanonicalSystem& cs,
                          const PipelineConfig& cfg) {
  cfg.validate(s.n);
  SimulationReport rep;
  rep.curves = curve_points(s, cfg);
  rep.oracle_tol = cfg.trajectory_tol();
  const ParamPoint xi = s.param_box.nominal();
  const std::vector<ParamPoint> hat{xi};
  const double tf = s.t0 + kDefaultSpan;
  const IntegrateOptions io = integrate_options(cfg);

  rep.original = sweep_original(s, &cs, rep.curves, hat, tf, io);
  const auto omega = omega_points(cs);
  rep.canonical = sweep_canonical(cs, default_perturbations(s.n).front(), omega, hat, tf, io);

  rep.ok = true;
  const auto oracle = zero_trajectory_oracle(cs);
  for (const auto& pt : rep.original.points) {
    if (!pt.ok) continue;
    rep.max_drift = std::isnan(pt.max_drift) || std::isnan(rep.max_drift)
                        ? std::numeric_limits<double>::quiet_NaN()
                        : std::max(rep.max_drift, pt.max_drift);
    if (cfg.oracle) {
      const double dev = compare_to_oracle(pt.trajectory, oracle);
      rep.oracle_deviation.push_back(dev);
      if (!(dev < rep.oracle_tol)) rep.ok = false;
    }
  }
  if (cfg.oracle) {
    for (const auto& pt : rep.original.points) {
      if (!pt.ok) rep.ok = false;
    }
  }
  for (const auto& pt : rep.canonical.points) {
    if (pt.ok) rep.max_decay_ratio = std::max(rep.max_decay_ratio, pt.decay_ratio);
  }

  // Plots: the surfaces and level sections use the level box nominal point
  // when it is among the curves, otherwise the last curve.
  const std::size_t last = s.n - 1;
  const double t0 = s.t0;
  std::optional<LevelVec> focus;
  if (!rep.curves.empty()) {
    const LevelVec nominal = s.level_box.nominal();
    focus = std::find(rep.curves.begin(), rep.curves.end(), nominal) != rep.curves.end()
                ? nominal
                : rep.curves.back();
  }
  const auto t_fine = linspace(t0, tf, kDefaultSamples);
  const auto t_mid = linspace(t0, tf, 49);
  const auto y_axis = linspace(-0.5, 1.5, 41);

  rep.plots.push_back({"graph1_integral_curves.csv", integral_curves(rep.original)});
  {
    PlotData d = focus ? level_sections(s, *focus, xi, linspace(t0, tf, 25))
                       : level_sections(s, LevelVec(s.n, 0.0), xi, {});
    rep.plots.push_back({"graph2_level_sections.csv", std::move(d)});
  }
  if (s.n >= 2) {
    rep.plots.push_back(
        {"graph3_criterion_3d.csv", criterion_3d(cs, last, 0, rep.curves, xi, t_mid, y_axis)});
  }
  rep.plots.push_back(
      {"graph4_criterion_1d.csv", criterion_1d(cs, last, rep.curves, xi, t_fine)});
  {
    const std::vector<double> t_section{t0 + 0.5 * kDefaultSpan};
    PlotData d = !rep.curves.empty()
                     ? rhs_surface(cs, last, rep.curves.front(), xi, t_section, y_axis)
                     : rhs_surface(cs, last, LevelVec(s.n, 0.0), xi, {}, y_axis);
    rep.plots.push_back({"graph5_rhs_surface.csv", std::move(d)});
  }
  {
    const std::vector<double> t_ends{t0, tf};
    PlotData d = focus ? rhs_surface(cs, last, *focus, xi, t_ends, y_axis)
                       : rhs_surface(cs, last, LevelVec(s.n, 0.0), xi, {}, y_axis);
    rep.plots.push_back({"graph6_rhs_surface.csv", std::move(d)});
  }
  return rep;
}

void write_plots(const SimulationReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& p : rep.plots) emit_plot_data(p.data, p.data.kind, dir / p.file);
}

}  // namespace lyacanon
