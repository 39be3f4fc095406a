#include "lyacanon/stability.hpp"

#include <algorithm>
#include <cmath>

#include "grid_eval.hpp"

namespace lyacanon {

std::string_view to_string(Parity p) { return p == Parity::Odd ? "odd" : "even"; }

std::string_view to_string(ComponentVerdict v) {
  switch (v) {
    case ComponentVerdict::StableEvidence: return "stable-evidence";
    case ComponentVerdict::Inconclusive: return "inconclusive";
    case ComponentVerdict::UnstableEvidence: return "unstable-evidence";
    case ComponentVerdict::Degenerate: return "degenerate-beyond-cap";
  }
  return "?";
}

void LyapunovSpec::validate(std::size_t n) const {
  if (!weights.empty() && weights.size() != n) {
    throw Error("Lyapunov weights: expected " + std::to_string(n) + " values, got " +
                std::to_string(weights.size()));
  }
  for (double a : weights) {
    if (!(a > 0) || !std::isfinite(a)) throw Error("Lyapunov weights must be positive");
  }
  if (exponent < 2 || exponent % 2 != 0) throw Error("Lyapunov exponent must be even and >= 2");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw Error("Lyapunov lambda must be >= 1");
}

namespace {

SampleGrid level_param_grid(const CanonicalSystem& cs, std::span<const LevelVec> c_points,
                            std::span<const ParamPoint> xi_points) {
  SampleGrid g;
  g.names = cs.level_names;
  g.names.insert(g.names.end(), cs.param_names.begin(), cs.param_names.end());
  for (const auto& xi : xi_points) {
    if (xi.size() != cs.m) throw DimensionError("parameter point has wrong length");
    for (const auto& c : c_points) {
      if (c.size() != cs.n) throw DimensionError("level point has wrong length");
      std::vector<double> p = c;
      p.insert(p.end(), xi.begin(), xi.end());
      g.points.push_back(std::move(p));
    }
  }
  return g;
}

SampleGrid dedupe(SampleGrid g) {
  std::sort(g.points.begin(), g.points.end());
  g.points.erase(std::unique(g.points.begin(), g.points.end()), g.points.end());
  return g;
}

/// Restricted y_i-derivatives, computed on demand and shared across points.
class DerivativeCache {
 public:
  explicit DerivativeCache(const CanonicalSystem& cs) : cs_(cs), raw_(cs.n), restricted_(cs.n) {}

  const Expr& restricted(std::size_t i, int order) {
    auto& raw = raw_[i];
    auto& res = restricted_[i];
    const std::string& y = cs_.canon_names[i];
    while (static_cast<int>(raw.size()) < order) {
      raw.push_back(diff(raw.empty() ? cs_.rhs_canon[i] : raw.back(), y));
      res.push_back(simplify(substitute(raw.back(), {{y, Expr::constant(0)}})));
    }
    return res[static_cast<std::size_t>(order - 1)];
  }

 private:
  const CanonicalSystem& cs_;
  std::vector<std::vector<Expr>> raw_;
  std::vector<std::vector<Expr>> restricted_;
};

RankResult rank_with(DerivativeCache& cache, const CanonicalSystem& cs, std::size_t i,
                     const SampleGrid& grid, int s_max) {
  if (s_max < 1) throw Error("classificational_rank: s_max must be >= 1");
  if (i >= cs.n) throw Error("classificational_rank: component out of range");
  const SampleGrid g = grid.with_fixed(cs.canon_names[i], 0.0);
  const auto slots = cs.canon_slots();
  RankResult r;
  for (int s = 1; s <= s_max; ++s) {
    const Expr& d = cache.restricted(i, s);
    const auto rows = detail::eval_on_grid(std::span(&d, 1), cs.guards, slots, g);
    std::vector<double> vals;
    for (const auto& row : rows) {
      if (!row.empty()) vals.push_back(row[0]);
    }
    if (vals.empty()) return r;  // nothing valid to judge
    double max_abs = 0.0;
    for (double v : vals) max_abs = std::max(max_abs, std::abs(v));
    if (!(max_abs > kRankZeroTol)) continue;
    r.rank = s;
    r.parity = s % 2 == 1 ? Parity::Odd : Parity::Even;
    r.derivative = d;
    r.evaluated = vals.size();
    r.max_abs = max_abs;
    r.min_value = *std::min_element(vals.begin(), vals.end());
    r.max_value = *std::max_element(vals.begin(), vals.end());
    std::size_t neg = 0, pos = 0;
    for (double v : vals) {
      if (v < 0) ++neg;
      if (v > 0) ++pos;
    }
    const double n = static_cast<double>(vals.size());
    r.agreement = static_cast<double>(std::max(neg, pos)) / n;
    if (r.agreement >= kSignAgreement) r.sign = neg > pos ? -1 : 1;
    return r;
  }
  r.degenerate = true;
  r.rank = 0;
  return r;
}

}  // namespace

RankResult classificational_rank(const CanonicalSystem& cs, std::size_t i, const SampleGrid& grid,
                                 int s_max) {
  DerivativeCache cache(cs);
  return rank_with(cache, cs, i, grid, s_max);
}

AmapResult a_mapping_check(const CanonicalSystem& cs, std::size_t i, const SampleGrid& grid,
                           double zero_tol) {
  if (i >= cs.n) throw Error("a_mapping_check: component out of range");
  const auto slots = cs.canon_slots();
  const auto rows = detail::eval_on_grid(std::span(&cs.rhs_canon[i], 1), cs.guards, slots, grid);
  const auto yi_opt = grid.index_of(cs.canon_names[i]);
  if (!yi_opt) throw Error("a_mapping_check: grid does not bind " + cs.canon_names[i]);
  const std::size_t yi = *yi_opt;
  AmapResult r;
  std::size_t worst_at = 0;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (rows[p].empty()) continue;
    ++r.evaluated;
    const double f = rows[p][0];
    const double y = grid.points[p][yi];
    double bad = 0.0;
    if (y == 0.0) {
      if (!(std::abs(f) <= zero_tol)) bad = std::isfinite(f) ? std::abs(f) : INFINITY;
    } else if (y > 0.0) {
      if (!(f < 0.0)) bad = std::isfinite(f) ? std::max(f, 1e-300) : INFINITY;
    } else {
      if (!(f > 0.0)) bad = std::isfinite(f) ? std::max(-f, 1e-300) : INFINITY;
    }
    if (bad > 0.0) {
      ++r.violations;
      if (bad > r.worst || !r.witness) {
        r.worst = std::max(r.worst, bad);
        worst_at = p;
        r.witness = grid.binding(worst_at);
      }
    }
  }
  r.positive = r.evaluated > 0 && r.violations == 0;
  return r;
}

SampleGrid stability_grid(const CanonicalSystem& cs, std::span<const LevelVec> c_points,
                          std::span<const ParamPoint> xi_points, const StabilityGridSpec& spec,
                          Interval box, std::size_t y_points) {
  std::vector<double> ys = interior_points(box.lo, box.hi, y_points);
  if (box.lo < 0.0 && box.hi > 0.0) ys.push_back(0.0);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  axes.emplace_back(std::string(kTimeVar), linspace(cs.t0, cs.t0 + spec.t_span, spec.t_points));
  for (const auto& y : cs.canon_names) axes.emplace_back(y, ys);
  return SampleGrid::product(SampleGrid::cartesian(axes),
                             level_param_grid(cs, c_points, xi_points));
}

ComponentVerdict component_verdict(const RankResult& rank, const AmapResult& amap) {
  if (rank.degenerate) return ComponentVerdict::Degenerate;
  if (rank.rank == 0 || !rank.sign) return ComponentVerdict::Inconclusive;
  if (rank.parity == Parity::Odd && *rank.sign > 0) return ComponentVerdict::UnstableEvidence;
  // Unit rank with negative sign settles the point without the sign sweep.
  if (rank.rank == 1 && *rank.sign < 0) return ComponentVerdict::StableEvidence;
  if (rank.parity == Parity::Odd && *rank.sign < 0 && amap.positive) {
    return ComponentVerdict::StableEvidence;
  }
  return ComponentVerdict::Inconclusive;
}

bool CriterionReport::stable() const {
  return !components.empty() &&
         std::all_of(components.begin(), components.end(), [](const ComponentReport& c) {
           return c.verdict == ComponentVerdict::StableEvidence;
         });
}

namespace {

CriterionReport analyze_with(DerivativeCache& cache, const CanonicalSystem& cs,
                             std::span<const LevelVec> c_points,
                             std::span<const ParamPoint> xi_points, const StabilityGridSpec& spec,
                             int s_max) {
  const SampleGrid grid =
      stability_grid(cs, c_points, xi_points, spec, spec.amap_box, spec.y_points);
  CriterionReport rep;
  for (std::size_t i = 0; i < cs.n; ++i) {
    ComponentReport cr;
    cr.component = i;
    cr.rank = rank_with(cache, cs, i, dedupe(grid.with_fixed(cs.canon_names[i], 0.0)), s_max);
    cr.amap = a_mapping_check(cs, i, grid);
    cr.verdict = component_verdict(cr.rank, cr.amap);
    rep.components.push_back(std::move(cr));
  }
  return rep;
}

}  // namespace

CriterionReport analyze_components(const CanonicalSystem& cs, std::span<const LevelVec> c_points,
                                   std::span<const ParamPoint> xi_points,
                                   const StabilityGridSpec& spec, int s_max) {
  DerivativeCache cache(cs);
  return analyze_with(cache, cs, c_points, xi_points, spec, s_max);
}

LyapunovFunctions build_lyapunov(const LyapunovSpec& spec, std::size_t n) {
  spec.validate(n);
  Expr w;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = spec.weights.empty() ? 1.0 : spec.weights[i];
    Expr term = Expr::constant(a) * pow(Expr::var("y" + std::to_string(i + 1)),
                                        Expr::constant(spec.exponent));
    w = i == 0 ? term : w + term;
  }
  w = simplify(w);
  Expr v = simplify(w * (Expr::constant(spec.lambda) +
                         call(Func::Exp, -Expr::var(std::string(kTimeVar)))));
  return {w, v};
}

Expr lyapunov_derivative(const CanonicalSystem& cs, const Expr& V) {
  Expr d = diff(V, kTimeVar);
  for (std::size_t i = 0; i < cs.n; ++i) {
    Expr dv = diff(V, cs.canon_names[i]);
    if (!dv.is_constant(0)) d = d + dv * cs.rhs_canon[i];
  }
  return simplify(d);
}

LyapunovReport verify_lyapunov(const CanonicalSystem& cs, const LyapunovSpec& spec,
                               const SampleGrid& grid, std::span<const Trajectory> trajectories) {
  auto [W, V] = build_lyapunov(spec, cs.n);
  LyapunovReport rep;
  rep.W = W;
  rep.V = V;
  rep.dVdt = lyapunov_derivative(cs, V);

  const auto slots = cs.canon_slots();
  const std::vector<Expr> roots{V, rep.dVdt};
  const auto rows = detail::eval_on_grid(roots, cs.guards, slots, grid);
  std::vector<std::size_t> yidx;
  for (const auto& y : cs.canon_names) yidx.push_back(*grid.index_of(y));
  rep.min_V = INFINITY;
  rep.max_dVdt = -INFINITY;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (rows[p].empty()) continue;
    double norm2 = 0.0;
    for (std::size_t k : yidx) norm2 += grid.points[p][k] * grid.points[p][k];
    if (std::sqrt(norm2) < kOriginExclusion) continue;
    ++rep.evaluated;
    const double v = rows[p][0];
    const double dv = rows[p][1];
    rep.min_V = std::min(rep.min_V, v);
    rep.max_dVdt = std::max(rep.max_dVdt, dv);
    const bool bad_v = !(v > 0);
    const bool bad_dv = !(dv < 0);
    rep.v_violations += bad_v;
    rep.dvdt_violations += bad_dv;
    if ((bad_v || bad_dv) && !rep.witness) rep.witness = grid.binding(p);
  }

  std::vector<std::string> yslots(cs.canon_names.begin(), cs.canon_names.end());
  Program w_prog(W, yslots);
  bool trajectories_ok = true;
  for (const auto& tr : trajectories) {
    MonotonicityStats st;
    st.c = tr.c;
    st.xi = tr.xi;
    if (!tr.step_states.empty()) st.y0 = tr.step_states.front();
    for (std::size_t k = 0; k + 1 < tr.step_states.size(); ++k) {
      const auto& a = tr.step_states[k];
      double norm2 = 0.0;
      for (double y : a) norm2 += y * y;
      if (std::sqrt(norm2) < kTrajectoryFloor) break;
      ++st.steps;
      const double wa = w_prog(a);
      const double wb = w_prog(tr.step_states[k + 1]);
      if (!(wb < wa)) {
        ++st.violations;
        st.max_increase = std::max(st.max_increase, wb - wa);
      }
    }
    if (!tr.step_states.empty()) {
      double norm2 = 0.0;
      for (double y : tr.step_states.back()) norm2 += y * y;
      st.final_norm = std::sqrt(norm2);
    }
    st.ok = st.violations == 0 && tr.step_states.size() > 1;
    trajectories_ok = trajectories_ok && st.ok;
    rep.trajectories.push_back(std::move(st));
  }
  rep.verified = rep.evaluated > 0 && rep.v_violations == 0 && rep.dvdt_violations == 0 &&
                 trajectories_ok;
  return rep;
}

RegionScan scan_region(const CanonicalSystem& cs, std::span<const ParamPoint> xi_grid,
                       std::span<const LevelVec> c_grid, const StabilityGridSpec& spec,
                       int s_max) {
  DerivativeCache cache(cs);
  RegionScan scan;
  scan.inclusion = true;
  for (const auto& xi : xi_grid) {
    SystemVerdict sys;
    sys.xi = xi;
    sys.stable = true;
    for (const auto& c : c_grid) {
      const CriterionReport rep =
          analyze_with(cache, cs, std::span(&c, 1), std::span(&xi, 1), spec, s_max);
      ScanPoint pt;
      pt.c = c;
      pt.xi = xi;
      for (const auto& comp : rep.components) {
        pt.components.push_back(comp.verdict);
        pt.ranks.push_back(comp.rank.rank);
      }
      pt.stable = rep.stable();
      ++sys.curves;
      if (!pt.stable) ++sys.failing;
      sys.stable = sys.stable && pt.stable;
      scan.per_curve.push_back(std::move(pt));
    }
    scan.inclusion = scan.inclusion && sys.stable;
    scan.per_system.push_back(std::move(sys));
  }
  return scan;
}

}  // namespace lyacanon
