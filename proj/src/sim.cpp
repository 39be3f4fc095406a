#include "lyacanon/sim.hpp"

#include <cmath>
#include <limits>

#include "lyacanon/parallel.hpp"
#include "lyacanon/program.hpp"

namespace lyacanon {

namespace {

Binding make_context(const std::vector<std::string>& level_names, const LevelVec& c,
                     const std::vector<std::string>& param_names, const ParamPoint& xi) {
  Binding b;
  for (std::size_t i = 0; i < c.size() && i < level_names.size(); ++i) b[level_names[i]] = c[i];
  for (std::size_t j = 0; j < xi.size(); ++j) b[param_names[j]] = xi[j];
  return b;
}

double norm2(const StatePoint& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Trajectory integrate_original(const SystemDef& s, const StatePoint& x0, const ParamPoint& xi,
                              double tf, const IntegrateOptions& options, const LevelVec* c) {
  if (xi.size() != s.m) throw DimensionError("parameter point has wrong length");
  OdeProblem p;
  p.rhs = s.rhs;
  p.states = s.state_names;
  p.context_names = s.param_names;
  p.context_values = xi;
  p.guards = s.domain_guards;
  Trajectory tr = integrate(p, s.t0, tf, x0, options);
  tr.space = Space::Original;
  tr.xi = xi;
  tr.c = c ? *c : c_from_x0(s, x0, xi);
  tr.context = make_context(s.level_names(), tr.c, s.param_names, xi);

  std::vector<std::string> slots = s.point_slots();
  // One program per integral: an integral singular at a sample must not
  // mask the others.
  std::vector<Program> g;
  for (const auto& e : s.integrals) g.emplace_back(e, slots);
  tr.drift.assign(s.n, -1.0);
  std::vector<double> in(slots.size());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    in[0] = tr.times[k];
    std::copy(tr.states[k].begin(), tr.states[k].end(), in.begin() + 1);
    std::copy(xi.begin(), xi.end(), in.begin() + 1 + s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
      double v = 0.0;
      if (!g[i].try_eval(in, std::span<double>(&v, 1)) || !std::isfinite(v)) continue;
      tr.drift[i] = std::max(tr.drift[i], std::abs(v - tr.c[i]));
    }
  }
  for (double& d : tr.drift) {
    if (d < 0.0) d = std::numeric_limits<double>::quiet_NaN();
  }
  return tr;
}

Trajectory integrate_canonical(const CanonicalSystem& cs, const StatePoint& y0, const LevelVec& c,
                               const ParamPoint& xi, double tf, const IntegrateOptions& options) {
  if (c.size() != cs.n || xi.size() != cs.m) throw DimensionError("canonical context has wrong size");
  OdeProblem p;
  p.rhs = cs.rhs_canon;
  p.states = cs.canon_names;
  p.context_names = cs.level_names;
  p.context_names.insert(p.context_names.end(), cs.param_names.begin(), cs.param_names.end());
  p.context_values = c;
  p.context_values.insert(p.context_values.end(), xi.begin(), xi.end());
  p.guards = cs.guards;
  Trajectory tr = integrate(p, cs.t0, tf, y0, options);
  tr.space = Space::Canonical;
  tr.c = c;
  tr.xi = xi;
  tr.context = make_context(cs.level_names, c, cs.param_names, xi);
  return tr;
}

double compare_to_oracle(const Trajectory& traj, std::span<const Expr> oracle) {
  if (!traj.states.empty() && oracle.size() != traj.states.front().size()) {
    throw DimensionError("oracle has the wrong number of components");
  }
  std::vector<std::string> slots{std::string(kTimeVar)};
  for (const auto& [name, value] : traj.context) slots.push_back(name);
  Program prog(oracle, slots);
  std::vector<double> in(slots.size());
  std::size_t k = 1;
  for (const auto& [name, value] : traj.context) in[k++] = value;
  std::vector<double> out(oracle.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    in[0] = traj.times[i];
    prog.eval(in, out);
    for (std::size_t j = 0; j < out.size(); ++j) {
      worst = std::max(worst, std::abs(traj.states[i][j] - out[j]));
    }
  }
  return worst;
}

std::vector<Expr> zero_trajectory_oracle(const CanonicalSystem& cs) {
  Substitution zero;
  for (const auto& y : cs.canon_names) zero.emplace(y, Expr::constant(0));
  std::vector<Expr> out;
  for (const auto& x : cs.forward_map) out.push_back(simplify(substitute(x, zero)));
  return out;
}

CrossCheck cross_coordinate_check(const SystemDef& s, const CanonicalSystem& cs, const LevelVec& c,
                                  const ParamPoint& xi, const StatePoint& y0, double tf,
                                  const IntegrateOptions& options) {
  CrossCheck r;
  const StatePoint x0 = decanonize_point(cs, cs.t0, y0, c, xi);
  r.y = integrate_canonical(cs, y0, c, xi, tf, options);
  IntegrateOptions xo = options;
  xo.sample_times = r.y.times;
  r.x = integrate_original(s, x0, xi, tf, xo);
  Program fwd(cs.forward_map, cs.canon_slots());
  std::vector<double> in(1 + 2 * cs.n + cs.m), out(cs.n);
  std::copy(c.begin(), c.end(), in.begin() + 1 + cs.n);
  std::copy(xi.begin(), xi.end(), in.begin() + 1 + 2 * cs.n);
  for (std::size_t k = 0; k < r.y.times.size(); ++k) {
    in[0] = r.y.times[k];
    std::copy(r.y.states[k].begin(), r.y.states[k].end(), in.begin() + 1);
    fwd.eval(in, out);
    for (std::size_t i = 0; i < cs.n; ++i) {
      r.max_deviation = std::max(r.max_deviation, std::abs(out[i] - r.x.states[k][i]));
    }
  }
  return r;
}

namespace {

struct Combo {
  LevelVec c;
  ParamPoint xi;
};

std::vector<Combo> combos(std::span<const LevelVec> c_grid, std::span<const ParamPoint> xi_grid) {
  std::vector<Combo> out;
  for (const auto& xi : xi_grid) {
    for (const auto& c : c_grid) out.push_back({c, xi});
  }
  return out;
}

}  // namespace

SweepResult sweep_original(const SystemDef& s, const CanonicalSystem* guide,
                           std::span<const LevelVec> c_grid, std::span<const ParamPoint> xi_grid,
                           double tf, const IntegrateOptions& options) {
  const auto jobs = combos(c_grid, xi_grid);
  SweepResult res;
  res.space = Space::Original;
  res.state_names = s.state_names;
  res.level_names = s.level_names();
  res.points.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) {
    SweepPoint& pt = res.points[k];
    pt.c = jobs[k].c;
    pt.xi = jobs[k].xi;
    try {
      StatePoint guess;
      if (guide) {
        try {
          guess = decanonize_point(*guide, s.t0, StatePoint(s.n, 0.0), pt.c, pt.xi);
        } catch (const Error&) {
          guess.clear();
        }
      }
      if (guess.empty()) {
        for (const auto& r : s.state_box.ranges) guess.push_back(r.mid());
      }
      pt.initial = psi_solve(s, pt.c, pt.xi, guess);
      pt.trajectory = integrate_original(s, pt.initial, pt.xi, tf, options, &pt.c);
      pt.final_state = pt.trajectory.states.back();
      for (double d : pt.trajectory.drift) {
        if (std::isnan(d)) {
          pt.max_drift = d;
          break;
        }
        pt.max_drift = std::max(pt.max_drift, d);
      }
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  return res;
}

SweepResult sweep_canonical(const CanonicalSystem& cs, const StatePoint& y0,
                            std::span<const LevelVec> c_grid, std::span<const ParamPoint> xi_grid,
                            double tf, const IntegrateOptions& options) {
  const auto jobs = combos(c_grid, xi_grid);
  SweepResult res;
  res.space = Space::Canonical;
  res.state_names = cs.canon_names;
  res.level_names = cs.level_names;
  res.points.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) {
    SweepPoint& pt = res.points[k];
    pt.c = jobs[k].c;
    pt.xi = jobs[k].xi;
    pt.initial = y0;
    try {
      pt.trajectory = integrate_canonical(cs, y0, pt.c, pt.xi, tf, options);
      pt.final_state = pt.trajectory.states.back();
      const double n0 = norm2(y0);
      pt.decay_ratio = n0 > 0 ? norm2(pt.final_state) / n0 : 0.0;
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  return res;
}

}  // namespace lyacanon
