#include "lyacanon/report.hpp"

#include <cmath>

namespace lyacanon {

namespace {

// JSON has no infinities or NaN; those become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json exprs(const std::vector<Expr>& es) {
  Json a = Json::array();
  for (const auto& e : es) a.push_back(to_string(e));
  return a;
}

Json opt_binding(const std::optional<Binding>& b) { return b ? to_json(*b) : Json(nullptr); }

}  // namespace

Json to_json(const Binding& b) {
  Json o = Json::object();
  for (const auto& [k, v] : b) o[k] = num(v);
  return o;
}

Json validation_report(const SystemDef& s, const ParamPoint& xi, const IntegralValidation& v) {
  Json j;
  j["ok"] = v.ok;
  j["n"] = s.n;
  j["m"] = s.m;
  j["xi"] = vec(xi);
  j["valid_points"] = v.valid_points;
  j["skipped_points"] = v.skipped_points;
  j["rank_fraction"] = num(v.rank_fraction);
  Json ints = Json::array();
  double drift = 0.0;
  for (const auto& c : v.integrals) {
    ints.push_back({{"name", c.name},
                    {"max_abs_lie", num(c.max_abs_lie)},
                    {"ok", c.ok},
                    {"witness", opt_binding(c.witness)}});
    drift = std::max(drift, c.max_abs_lie);
  }
  j["integrals"] = ints;
  j["drift"] = num(drift);
  j["warnings"] = s.warnings;
  return j;
}

Json canonical_report(const CanonicalSystem& cs, const CanonicalChecks& checks) {
  Json j;
  j["ok"] = checks.ok;
  j["n"] = cs.n;
  j["state_names"] = cs.state_names;
  j["canon_names"] = cs.canon_names;
  Json stages = Json::array();
  for (const auto& st : cs.stages) {
    stages.push_back({{"k", st.k},
                      {"component", st.component + 1},
                      {"phi", to_string(st.phi)},
                      {"source", std::string(to_string(st.source))},
                      {"residual_max_abs", num(st.residual_check.max_abs)}});
  }
  j["stages"] = stages;
  j["rhs_canon"] = exprs(cs.rhs_canon);
  j["forward_map"] = exprs(cs.forward_map);
  j["inverse_map"] = exprs(cs.inverse_map);
  j["guards"] = exprs(cs.guards);
  Json flat = Json::array();
  for (const auto& f : checks.flatness) {
    flat.push_back({{"component", f.component + 1},
                    {"max_abs", num(f.max_abs)},
                    {"evaluated", f.evaluated},
                    {"ok", f.ok},
                    {"witness", opt_binding(f.witness)}});
  }
  j["flatness"] = flat;
  j["round_trip"] = {{"max_abs", num(checks.round_trip.max_abs)},
                     {"evaluated", checks.round_trip.evaluated},
                     {"ok", checks.round_trip.ok}};
  const auto& cv = checks.convergence;
  j["convergence"] = {{"radii", vec(cv.radii)},
                      {"sup_gap", vec(cv.sup_gap)},
                      {"lipschitz", num(cv.lipschitz)},
                      {"horizon_ratio", num(cv.horizon_ratio)},
                      {"monotone", cv.monotone},
                      {"verdict", cv.verdict},
                      {"label", "evidence, not proof"}};
  return j;
}

Json stability_report(const StabilityReport& rep, const LyapunovSpec& spec) {
  Json j;
  j["ok"] = rep.ok;
  j["label"] = "evidence, not proof";
  j["xi_hat"] = vec(rep.xi_hat);
  Json omega = Json::array();
  for (const auto& c : rep.omega) omega.push_back(vec(c));
  j["omega"] = omega;

  Json comps = Json::array();
  for (const auto& c : rep.components.components) {
    Json o;
    o["component"] = c.component + 1;
    o["rank"] = c.rank.degenerate ? Json(nullptr) : Json(c.rank.rank);
    o["degenerate"] = c.rank.degenerate;
    o["parity"] = c.rank.rank > 0 ? Json(std::string(to_string(c.rank.parity))) : Json(nullptr);
    o["sign"] = c.rank.sign ? Json(*c.rank.sign < 0 ? "-" : "+") : Json(nullptr);
    o["sign_agreement"] = num(c.rank.agreement);
    o["derivative"] = c.rank.rank > 0 ? Json(to_string(c.rank.derivative)) : Json(nullptr);
    o["derivative_range"] = {num(c.rank.min_value), num(c.rank.max_value)};
    o["amap"] = {{"positive", c.amap.positive},
                 {"violations", c.amap.violations},
                 {"evaluated", c.amap.evaluated},
                 {"worst", num(c.amap.worst)},
                 {"witness", opt_binding(c.amap.witness)}};
    o["verdict"] = std::string(to_string(c.verdict));
    comps.push_back(o);
  }
  j["components"] = comps;

  const auto& l = rep.lyapunov;
  Json traj = Json::array();
  for (const auto& t : l.trajectories) {
    traj.push_back({{"y0", vec(t.y0)},
                    {"c", vec(t.c)},
                    {"steps", t.steps},
                    {"violations", t.violations},
                    {"max_increase", num(t.max_increase)},
                    {"final_norm", num(t.final_norm)},
                    {"ok", t.ok}});
  }
  j["lyapunov"] = {{"weights", spec.weights},
                   {"exponent", spec.exponent},
                   {"lambda", spec.lambda},
                   {"W", to_string(l.W)},
                   {"V", to_string(l.V)},
                   {"dVdt", to_string(l.dVdt)},
                   {"min_V", num(l.min_V)},
                   {"max_dVdt", num(l.max_dVdt)},
                   {"evaluated", l.evaluated},
                   {"v_violations", l.v_violations},
                   {"dvdt_violations", l.dvdt_violations},
                   {"witness", opt_binding(l.witness)},
                   {"trajectories", traj},
                   {"trajectory_errors", rep.trajectory_errors},
                   {"verified", l.verified}};

  Json curves = Json::array();
  for (const auto& p : rep.scan.per_curve) {
    Json verdicts = Json::array();
    for (auto v : p.components) verdicts.push_back(std::string(to_string(v)));
    curves.push_back({{"c", vec(p.c)},
                      {"xi", vec(p.xi)},
                      {"ranks", p.ranks},
                      {"components", verdicts},
                      {"stable", p.stable}});
  }
  Json systems = Json::array();
  for (const auto& s : rep.scan.per_system) {
    systems.push_back(
        {{"xi", vec(s.xi)}, {"curves", s.curves}, {"failing", s.failing}, {"stable", s.stable}});
  }
  j["scan"] = {{"label", rep.scan.label},
               {"per_curve", curves},
               {"per_system", systems},
               {"inclusion", rep.scan.inclusion}};
  return j;
}

Json simulation_report(const SimulationReport& rep) {
  Json j;
  j["ok"] = rep.ok;
  Json curves = Json::array();
  for (std::size_t k = 0; k < rep.original.points.size(); ++k) {
    const auto& p = rep.original.points[k];
    Json o{{"c", vec(p.c)}, {"xi", vec(p.xi)}, {"ok", p.ok}};
    if (p.ok) {
      o["x0"] = vec(p.initial);
      o["final_state"] = vec(p.final_state);
      o["drift"] = vec(p.trajectory.drift);
      o["accepted_steps"] = p.trajectory.accepted;
      o["rejected_steps"] = p.trajectory.rejected;
    } else {
      o["error"] = p.error;
    }
    curves.push_back(o);
  }
  j["curves"] = curves;
  j["max_drift"] = num(rep.max_drift);
  if (!rep.oracle_deviation.empty()) {
    j["oracle"] = {{"deviation", vec(rep.oracle_deviation)}, {"tolerance", rep.oracle_tol}};
  }
  Json canon = Json::array();
  for (const auto& p : rep.canonical.points) {
    Json o{{"c", vec(p.c)}, {"y0", vec(p.initial)}, {"ok", p.ok}};
    if (p.ok) {
      o["final_state"] = vec(p.final_state);
      o["decay_ratio"] = num(p.decay_ratio);
    } else {
      o["error"] = p.error;
    }
    canon.push_back(o);
  }
  j["canonical"] = canon;
  j["max_decay_ratio"] = num(rep.max_decay_ratio);
  Json files = Json::array();
  for (const auto& p : rep.plots) {
    files.push_back({{"file", p.file},
                     {"kind", std::string(to_string(p.data.kind))},
                     {"columns", p.data.columns},
                     {"rows", p.data.rows.size()}});
  }
  j["plots"] = files;
  return j;
}

}  // namespace lyacanon
