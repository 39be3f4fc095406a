#include "lyacanon/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lyacanon/parallel.hpp"
#include "lyacanon/program.hpp"

namespace lyacanon {

std::string_view to_string(SolveSource s) {
  switch (s) {
    case SolveSource::UserForm: return "solved-form";
    case SolveSource::AutoLinear: return "auto-linear";
    case SolveSource::AutoSquare: return "auto-square";
  }
  return "?";
}

std::vector<std::string> CanonicalSystem::canon_slots() const {
  std::vector<std::string> out{std::string(kTimeVar)};
  out.insert(out.end(), canon_names.begin(), canon_names.end());
  out.insert(out.end(), level_names.begin(), level_names.end());
  out.insert(out.end(), param_names.begin(), param_names.end());
  return out;
}

std::vector<std::string> CanonicalSystem::original_slots() const {
  std::vector<std::string> out{std::string(kTimeVar)};
  out.insert(out.end(), state_names.begin(), state_names.end());
  out.insert(out.end(), level_names.begin(), level_names.end());
  out.insert(out.end(), param_names.begin(), param_names.end());
  return out;
}

namespace {

std::string canon_name(std::size_t i) { return "y" + std::to_string(i + 1); }
std::string level_name(std::size_t i) { return "c" + std::to_string(i + 1); }

ZeroCheck zero_check(const Expr& e, const SampleGrid& grid, double tol) {
  ZeroCheck z;
  try {
    auto r = equiv_sample(e, Expr::constant(0), grid, tol);
    z.ok = r.equivalent;
    z.max_abs = r.max_abs_diff;
    z.evaluated = r.evaluated;
    z.witness = r.witness;
  } catch (const DomainError&) {
    z.ok = false;
    z.max_abs = INFINITY;
  }
  return z;
}

bool numerically_zero(const Expr& e, const SampleGrid& grid, double tol) {
  if (e.is_constant()) return std::abs(e.value()) <= tol;
  return zero_check(e, grid, tol).ok;
}

}  // namespace

CascadeState initial_cascade_state(const SystemDef& s) {
  CascadeState st;
  st.coords = s.state_names;
  st.rhs = s.rhs;
  st.integrals = s.integrals;
  for (const auto& x : s.state_names) st.forward.push_back(Expr::var(x));
  st.flattened.assign(s.n, false);
  return st;
}

SampleGrid stage_sample_grid(const SystemDef& s, const CascadeState& state,
                             const CascadeOptions& options) {
  std::vector<std::pair<std::string, Interval>> box;
  box.emplace_back(std::string(kTimeVar), Interval{s.t0, s.t0 + options.t_span});
  for (std::size_t i = 0; i < s.n; ++i) {
    box.emplace_back(state.coords[i], state.flattened[i]
                                          ? Interval{-options.y_range, options.y_range}
                                          : s.state_box.ranges[i]);
  }
  auto levels = s.level_names();
  for (std::size_t i = 0; i < s.n; ++i) box.emplace_back(levels[i], s.level_box.ranges[i]);
  for (std::size_t j = 0; j < s.m; ++j) box.emplace_back(s.param_names[j], s.param_box.ranges[j]);
  return SampleGrid::uniform(box, options.samples, options.seed + state.completed);
}

namespace {

struct Candidate {
  Expr phi;
  SolveSource source;
};

std::optional<Candidate> auto_solve(const Expr& integral, const std::string& target,
                                    const std::string& level, double neutral,
                                    const SampleGrid& grid, double tol, std::string& why) {
  // g = c is rewritten as N - c*D = 0 when g = N/D, so that the target
  // polynomial structure is not hidden behind a quotient.
  Expr c = Expr::var(level);
  Expr eq = integral.op() == Op::Div ? simplify(integral.lhs() - c * integral.rhs())
                                     : simplify(integral - c);
  Expr d1 = diff(eq, target);
  Expr d2 = diff(d1, target);
  const Substitution at_zero{{target, Expr::constant(0)}};
  const Substitution at_neutral{{target, Expr::constant(neutral)}};

  if (numerically_zero(d2, grid, tol)) {
    Expr slope = contains_var(d1, target) ? simplify(substitute(d1, at_neutral)) : d1;
    if (numerically_zero(slope, grid, tol)) {
      why = "equation does not depend on the component";
      return std::nullopt;
    }
    Expr offset = simplify(substitute(eq, at_zero));
    return Candidate{simplify(-(offset / slope)), SolveSource::AutoLinear};
  }
  Expr d3 = diff(d2, target);
  Expr d1_zero = simplify(substitute(d1, at_zero));
  if (numerically_zero(d3, grid, tol) && numerically_zero(d1_zero, grid, tol)) {
    Expr curvature = contains_var(d2, target) ? simplify(substitute(d2, at_neutral)) : d2;
    Expr lead = simplify(curvature / Expr::constant(2));
    Expr rest = simplify(substitute(eq, at_zero));
    return Candidate{simplify(call(Func::Sqrt, -(rest / lead))), SolveSource::AutoSquare};
  }
  why = "integral is neither linear nor of the form target^2 = rest in the component";
  return std::nullopt;
}

}  // namespace

CascadeStage derive_stage(const SystemDef& s, const CascadeState& state, std::size_t component,
                          const CascadeOptions& options) {
  if (component >= s.n || state.flattened.at(component)) {
    throw Error("derive_stage: component " + std::to_string(component + 1) +
                " is out of range or already flattened");
  }
  const std::string target = s.state_names[component];
  const std::string level = level_name(component);
  const double neutral = s.state_box.ranges[component].mid();
  const SampleGrid grid = stage_sample_grid(s, state, options);
  const Expr& integral = state.integrals[component];

  auto residual_of = [&](const Expr& phi) {
    Expr r = substitute(integral, {{target, phi}}) - Expr::var(level);
    return zero_check(r, grid, options.tol);
  };

  CascadeStage stage;
  stage.k = state.completed + 1;
  stage.component = component;
  std::string why;

  if (const auto& form = s.solved_forms[component]) {
    Substitution carry;
    for (std::size_t j = 0; j < s.n; ++j) {
      if (state.flattened[j]) carry.emplace(s.state_names[j], state.forward[j]);
    }
    Expr cand = simplify(substitute(form->expr, carry));
    bool usable = true;
    if (contains_var(cand, target)) {
      // After carrying earlier stages through, the form may mention the
      // component again; it is only usable if that dependence is spurious.
      usable = numerically_zero(diff(cand, target), grid, options.tol);
      if (usable) cand = simplify(substitute(cand, {{target, Expr::constant(neutral)}}));
    }
    if (usable) {
      ZeroCheck check = residual_of(cand);
      if (check.ok) {
        stage.phi = cand;
        stage.source = SolveSource::UserForm;
        stage.residual_check = check;
        return stage;
      }
    }
  }

  auto cand = auto_solve(integral, target, level, neutral, grid, options.tol, why);
  if (!cand) throw UnsolvableComponent(component + 1, why);
  ZeroCheck check = residual_of(cand->phi);
  if (!check.ok) {
    throw UnsolvableComponent(component + 1, "residual check failed (max |residual| = " +
                                                 std::to_string(check.max_abs) + ")");
  }
  stage.phi = cand->phi;
  stage.source = cand->source;
  stage.residual_check = check;
  return stage;
}

CascadeState apply_stage(const CascadeStage& stage, const CascadeState& state) {
  const std::size_t p = stage.component;
  const std::string target = state.coords[p];
  const Expr y = Expr::var(canon_name(p));
  const Substitution theta{{target, y + stage.phi}};

  CascadeState next = state;
  next.completed = state.completed + 1;
  next.coords[p] = canon_name(p);
  next.flattened[p] = true;

  for (std::size_t j = 0; j < state.rhs.size(); ++j) {
    if (j != p) next.rhs[j] = simplify(substitute(state.rhs[j], theta));
  }
  Expr flat = substitute(state.rhs[p], theta) - diff(stage.phi, kTimeVar);
  for (std::size_t j = 0; j < state.rhs.size(); ++j) {
    if (j == p) continue;
    Expr dphi = diff(stage.phi, state.coords[j]);
    if (dphi.is_constant(0)) continue;
    flat = flat - dphi * next.rhs[j];
  }
  next.rhs[p] = simplify(flat);

  for (auto& g : next.integrals) g = simplify(substitute(g, theta));
  for (auto& x : next.forward) x = simplify(substitute(x, theta));
  return next;
}

CanonicalSystem build_canonical(const SystemDef& s, const CascadeOptions& options) {
  std::vector<std::size_t> order = options.order;
  if (order.empty()) {
    order.resize(s.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != s.n || sorted[i] != i) {
        throw Error("build_canonical: stage order must be a permutation of the components");
      }
    }
  }

  CanonicalSystem cs;
  cs.n = s.n;
  cs.m = s.m;
  cs.t0 = s.t0;
  cs.state_names = s.state_names;
  for (std::size_t i = 0; i < s.n; ++i) cs.canon_names.push_back(canon_name(i));
  cs.level_names = s.level_names();
  cs.param_names = s.param_names;
  cs.param_box = s.param_box;
  cs.level_box = s.level_box;
  cs.original_guards = s.domain_guards;

  CascadeState state = initial_cascade_state(s);
  for (std::size_t component : order) {
    CascadeStage stage = derive_stage(s, state, component, options);
    state = apply_stage(stage, state);
    cs.stages.push_back(std::move(stage));
  }
  cs.rhs_canon = state.rhs;
  cs.forward_map = state.forward;

  // y_p = x_p - phi_p, with earlier y's replaced by their own inverse forms.
  cs.inverse_map.assign(s.n, Expr());
  Substitution earlier;
  for (const auto& stage : cs.stages) {
    const std::size_t p = stage.component;
    Expr y = simplify(Expr::var(s.state_names[p]) - substitute(stage.phi, earlier));
    cs.inverse_map[p] = y;
    earlier.emplace(canon_name(p), y);
  }

  Substitution to_canon;
  for (std::size_t i = 0; i < s.n; ++i) to_canon.emplace(s.state_names[i], cs.forward_map[i]);
  for (const auto& g : s.domain_guards) cs.guards.push_back(simplify(substitute(g, to_canon)));
  return cs;
}

namespace {

std::vector<double> assemble(double t, const StatePoint& v, const LevelVec& c, const ParamPoint& xi) {
  std::vector<double> in{t};
  in.insert(in.end(), v.begin(), v.end());
  in.insert(in.end(), c.begin(), c.end());
  in.insert(in.end(), xi.begin(), xi.end());
  return in;
}

void check_dims(const CanonicalSystem& cs, const StatePoint& v, const LevelVec& c,
                const ParamPoint& xi) {
  if (v.size() != cs.n || c.size() != cs.n || xi.size() != cs.m) {
    throw DimensionError("canonical point has wrong dimensions");
  }
}

void check_original_guards(const CanonicalSystem& cs, double t, const StatePoint& x,
                           const LevelVec& c, const ParamPoint& xi) {
  if (cs.original_guards.empty()) return;
  Program guards(cs.original_guards, cs.original_slots());
  std::vector<double> out(cs.original_guards.size());
  guards.eval(assemble(t, x, c, xi), out);
  for (double g : out) {
    if (!(g > 0)) throw DomainError("point violates the domain guards");
  }
}

}  // namespace

StatePoint canonize_point(const CanonicalSystem& cs, double t, const StatePoint& x,
                          const LevelVec& c, const ParamPoint& xi) {
  check_dims(cs, x, c, xi);
  check_original_guards(cs, t, x, c, xi);
  Program prog(cs.inverse_map, cs.original_slots());
  StatePoint y(cs.n);
  prog.eval(assemble(t, x, c, xi), y);
  return y;
}

StatePoint decanonize_point(const CanonicalSystem& cs, double t, const StatePoint& y,
                            const LevelVec& c, const ParamPoint& xi) {
  check_dims(cs, y, c, xi);
  Program prog(cs.forward_map, cs.canon_slots());
  StatePoint x(cs.n);
  prog.eval(assemble(t, y, c, xi), x);
  check_original_guards(cs, t, x, c, xi);
  return x;
}

SampleGrid canonical_grid(const CanonicalSystem& cs, const CanonicalGridSpec& spec) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  axes.emplace_back(std::string(kTimeVar), linspace(cs.t0, cs.t0 + spec.t_span, spec.t_points));
  for (const auto& y : cs.canon_names) {
    axes.emplace_back(y, linspace(spec.y_box.lo, spec.y_box.hi, spec.y_points));
  }
  SampleGrid ty = SampleGrid::cartesian(axes);

  auto cs_points = spec.c_points.empty() ? cs.level_box.vertices_and_center() : spec.c_points;
  auto xi_points =
      spec.xi_points.empty() ? std::vector<ParamPoint>{cs.param_box.nominal()} : spec.xi_points;
  SampleGrid cx;
  cx.names = cs.level_names;
  cx.names.insert(cx.names.end(), cs.param_names.begin(), cs.param_names.end());
  for (const auto& c : cs_points) {
    for (const auto& xi : xi_points) {
      std::vector<double> p = c;
      p.insert(p.end(), xi.begin(), xi.end());
      cx.points.push_back(std::move(p));
    }
  }
  return SampleGrid::product(ty, cx);
}

std::vector<FlatnessResult> verify_flatness(const CanonicalSystem& cs, const SampleGrid& grid,
                                            double tol) {
  std::vector<FlatnessResult> out;
  const auto slots = cs.canon_slots();
  for (std::size_t i = 0; i < cs.n; ++i) {
    SampleGrid g = grid.with_fixed(cs.canon_names[i], 0.0);
    std::vector<Expr> roots{cs.rhs_canon[i]};
    roots.insert(roots.end(), cs.guards.begin(), cs.guards.end());
    Program prog(roots, slots);
    const auto map = g.slot_map(slots);
    std::vector<double> values(g.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(g.size(), [&](std::size_t p) {
      std::vector<double> in(slots.size());
      for (std::size_t k = 0; k < slots.size(); ++k) in[k] = g.points[p][map[k]];
      std::vector<double> o(roots.size());
      if (!prog.try_eval(in, o)) return;
      for (std::size_t k = 1; k < o.size(); ++k) {
        if (!(o[k] > 0)) return;
      }
      values[p] = std::abs(o[0]);
    });
    FlatnessResult r;
    r.component = i;
    std::size_t worst = 0;
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (std::isnan(values[p])) continue;
      ++r.evaluated;
      if (values[p] > r.max_abs) {
        r.max_abs = values[p];
        worst = p;
      }
    }
    r.ok = r.evaluated > 0 && r.max_abs <= tol;
    if (!r.ok && r.evaluated > 0) r.witness = g.binding(worst);
    out.push_back(std::move(r));
  }
  return out;
}

RoundTripResult verify_round_trip(const CanonicalSystem& cs, const SampleGrid& grid, double tol) {
  const auto slots = cs.canon_slots();
  std::vector<Expr> fwd_roots = cs.forward_map;
  fwd_roots.insert(fwd_roots.end(), cs.guards.begin(), cs.guards.end());
  Program forward(fwd_roots, slots);
  Program inverse(cs.inverse_map, cs.original_slots());
  const auto map = grid.slot_map(slots);
  std::vector<double> errs(grid.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(grid.size(), [&](std::size_t p) {
    std::vector<double> in(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) in[k] = grid.points[p][map[k]];
    std::vector<double> x(fwd_roots.size());
    if (!forward.try_eval(in, x)) return;
    for (std::size_t k = cs.n; k < x.size(); ++k) {
      if (!(x[k] > 0)) return;
    }
    std::vector<double> back_in = in;
    for (std::size_t i = 0; i < cs.n; ++i) back_in[1 + i] = x[i];
    std::vector<double> y(cs.n);
    if (!inverse.try_eval(back_in, y)) return;
    double e = 0.0;
    for (std::size_t i = 0; i < cs.n; ++i) e = std::max(e, std::abs(y[i] - in[1 + i]));
    errs[p] = e;
  });
  RoundTripResult r;
  for (double e : errs) {
    if (std::isnan(e)) continue;
    ++r.evaluated;
    r.max_abs = std::max(r.max_abs, e);
  }
  r.ok = r.evaluated > 0 && r.max_abs <= tol;
  return r;
}

ConvergenceReport check_uniform_convergence(const CanonicalSystem& cs,
                                            const ConvergenceOptions& options) {
  return check_uniform_convergence(cs, cs.forward_map, options);
}

ConvergenceReport check_uniform_convergence(const CanonicalSystem& cs,
                                            std::span<const Expr> forward,
                                            const ConvergenceOptions& options) {
  if (forward.size() != cs.n) throw DimensionError("check_uniform_convergence: map size");
  const auto slots = cs.canon_slots();
  std::vector<Expr> roots(forward.begin(), forward.end());
  roots.insert(roots.end(), cs.guards.begin(), cs.guards.end());
  Program prog(roots, slots);

  // Directions: every non-zero vector in {-1, 0, 1}^n, normalised.
  std::vector<std::vector<double>> dirs;
  const std::size_t combos = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(cs.n)));
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<double> d(cs.n);
    std::size_t rem = code;
    double norm = 0.0;
    for (std::size_t i = 0; i < cs.n; ++i) {
      d[i] = static_cast<double>(rem % 3) - 1.0;
      rem /= 3;
      norm += d[i] * d[i];
    }
    if (norm == 0.0) continue;
    for (auto& v : d) v /= std::sqrt(norm);
    dirs.push_back(std::move(d));
  }

  std::vector<double> radii = options.radii;
  radii.push_back(0.0);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  auto c_points = options.c_points.empty() ? cs.level_box.vertices_and_center() : options.c_points;
  auto xi_points = options.xi_points.empty() ? std::vector<ParamPoint>{cs.param_box.nominal()}
                                             : options.xi_points;
  const auto times = linspace(cs.t0, cs.t0 + options.t_span, options.t_points);
  const double half = cs.t0 + 0.5 * options.t_span;

  // gap[r][window]: window 0 = first half of the time span, 1 = all of it.
  std::vector<std::array<double, 2>> gap(radii.size(), {0.0, 0.0});
  std::vector<double> in(slots.size());
  std::vector<double> base(roots.size());
  std::vector<double> out(roots.size());
  auto guards_ok = [&](const std::vector<double>& o) {
    for (std::size_t k = cs.n; k < o.size(); ++k) {
      if (!(o[k] > 0)) return false;
    }
    return true;
  };
  for (const auto& c : c_points) {
    for (const auto& xi : xi_points) {
      for (double t : times) {
        in[0] = t;
        for (std::size_t i = 0; i < cs.n; ++i) {
          in[1 + i] = 0.0;
          in[1 + cs.n + i] = c[i];
        }
        for (std::size_t j = 0; j < cs.m; ++j) in[1 + 2 * cs.n + j] = xi[j];
        if (!prog.try_eval(in, base) || !guards_ok(base)) continue;
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
          if (radii[ri] == 0.0) continue;
          for (double frac : {0.5, 1.0}) {
            for (const auto& d : dirs) {
              for (std::size_t i = 0; i < cs.n; ++i) in[1 + i] = frac * radii[ri] * d[i];
              if (!prog.try_eval(in, out) || !guards_ok(out)) continue;
              double g = 0.0;
              for (std::size_t i = 0; i < cs.n; ++i) g = std::max(g, std::abs(out[i] - base[i]));
              if (t <= half) gap[ri][0] = std::max(gap[ri][0], g);
              gap[ri][1] = std::max(gap[ri][1], g);
            }
          }
        }
      }
    }
  }

  ConvergenceReport rep;
  rep.radii = radii;
  double k_half = 0.0;
  double running = 0.0, running_half = 0.0;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    // sup over the ball of radius r includes every smaller radius
    running = std::max(running, gap[ri][1]);
    running_half = std::max(running_half, gap[ri][0]);
    rep.sup_gap.push_back(running);
    if (radii[ri] > 0) {
      rep.lipschitz = std::max(rep.lipschitz, running / radii[ri]);
      k_half = std::max(k_half, running_half / radii[ri]);
    }
  }
  rep.monotone = rep.sup_gap.front() == 0.0;
  // Strictly shrinking towards zero: every positive radius must show a gap
  // no larger than the next one.
  for (std::size_t ri = 1; ri < rep.sup_gap.size(); ++ri) {
    if (rep.sup_gap[ri] < rep.sup_gap[ri - 1]) rep.monotone = false;
  }
  rep.horizon_ratio = k_half > 0 ? rep.lipschitz / k_half : (rep.lipschitz > 0 ? INFINITY : 1.0);
  rep.verdict = rep.monotone && std::isfinite(rep.lipschitz) &&
                rep.horizon_ratio <= options.max_horizon_ratio;
  return rep;
}

}  // namespace lyacanon
