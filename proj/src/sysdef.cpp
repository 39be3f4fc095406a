#include "lyacanon/sysdef.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "lyacanon/parallel.hpp"
#include "toml_subset.hpp"

namespace lyacanon {

// ---------------------------------------------------------------------------
// ParamBox

void ParamBox::validate() const {
  if (ranges.size() != names.size()) throw Error("box: names and ranges differ in length");
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    if (!(ranges[j].lo <= ranges[j].hi)) {
      throw Error("box: empty interval for '" + names[j] + "'");
    }
  }
  if (hat) {
    if (hat->size() != names.size()) throw DimensionError("box: hat has wrong length");
    if (!contains(*hat)) throw Error("box: distinguished point lies outside the box");
  }
}

bool ParamBox::contains(std::span<const double> p) const {
  if (p.size() != ranges.size()) return false;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] < ranges[j].lo || p[j] > ranges[j].hi) return false;
  }
  return true;
}

std::vector<double> ParamBox::center() const {
  std::vector<double> c;
  for (const auto& r : ranges) c.push_back(r.mid());
  return c;
}

std::vector<double> ParamBox::nominal() const { return hat ? *hat : center(); }

std::vector<std::vector<double>> ParamBox::vertices_and_center() const {
  std::vector<std::vector<double>> out;
  const std::size_t k = ranges.size();
  if (k == 0) return {{}};
  std::set<std::vector<double>> seen;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    std::vector<double> v(k);
    for (std::size_t j = 0; j < k; ++j) {
      v[j] = (mask >> (k - 1 - j)) & 1 ? ranges[j].hi : ranges[j].lo;
    }
    if (seen.insert(v).second) out.push_back(std::move(v));
  }
  auto c = center();
  if (seen.insert(c).second) out.push_back(std::move(c));
  return out;
}

std::vector<std::vector<double>> ParamBox::grid(std::size_t per_axis) const {
  if (ranges.empty()) return {{}};
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    const auto& r = ranges[j];
    axes.emplace_back(names[j], r.lo == r.hi ? std::vector<double>{r.lo}
                                             : linspace(r.lo, r.hi, per_axis));
  }
  return SampleGrid::cartesian(axes).points;
}

ParamBox ParamBox::scaled(double factor) const {
  ParamBox b = *this;
  auto nom = nominal();
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    b.ranges[j].lo = nom[j] - factor * (nom[j] - ranges[j].lo);
    b.ranges[j].hi = nom[j] + factor * (ranges[j].hi - nom[j]);
  }
  return b;
}

// ---------------------------------------------------------------------------
// SystemDef

std::vector<std::string> SystemDef::level_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

std::vector<std::string> SystemDef::point_slots() const {
  std::vector<std::string> out{std::string(kTimeVar)};
  out.insert(out.end(), state_names.begin(), state_names.end());
  out.insert(out.end(), param_names.begin(), param_names.end());
  return out;
}

namespace {

void check_free_vars(const Expr& e, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& v : free_variables(e)) {
    if (!allowed.count(v)) {
      throw LoadError("free-variable violation: " + what + " references undeclared '" + v + "'");
    }
  }
}

}  // namespace

void SystemDef::validate() const {
  if (n == 0) throw DimensionError("system must have at least one state");
  if (state_names.size() != n) {
    throw DimensionError("dimension mismatch: n = " + std::to_string(n) + " but " +
                         std::to_string(state_names.size()) + " states declared");
  }
  if (param_names.size() != m) {
    throw DimensionError("dimension mismatch: m = " + std::to_string(m) + " but " +
                         std::to_string(param_names.size()) + " params declared");
  }
  if (rhs.size() != n) {
    throw DimensionError("dimension mismatch: " + std::to_string(n) + " states but " +
                         std::to_string(rhs.size()) + " right-hand sides");
  }
  if (integrals.size() != n) {
    throw DimensionError("dimension mismatch: " + std::to_string(n) + " states but " +
                         std::to_string(integrals.size()) + " integrals");
  }
  if (solved_forms.size() != n) throw DimensionError("solved-form table has wrong length");

  std::set<std::string> names;
  auto reserve = [&](const std::string& name) {
    if (!is_identifier(name)) throw LoadError("invalid identifier '" + name + "'");
    if (!names.insert(name).second) throw LoadError("duplicate name '" + name + "'");
  };
  reserve(std::string(kTimeVar));
  for (const auto& s : state_names) reserve(s);
  for (const auto& p : param_names) reserve(p);
  for (std::size_t i = 1; i <= n; ++i) {
    for (const char* prefix : {"c", "y"}) {
      std::string r = prefix + std::to_string(i);
      if (names.count(r)) throw LoadError("name '" + r + "' is reserved for level/canonical variables");
    }
  }

  std::set<std::string> base{std::string(kTimeVar)};
  base.insert(state_names.begin(), state_names.end());
  base.insert(param_names.begin(), param_names.end());
  for (std::size_t i = 0; i < n; ++i) {
    check_free_vars(rhs[i], base, "rhs of " + state_names[i]);
    check_free_vars(integrals[i], base, "integral g" + std::to_string(i + 1));
  }
  for (std::size_t g = 0; g < domain_guards.size(); ++g) {
    check_free_vars(domain_guards[g], base, "domain guard " + std::to_string(g + 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!solved_forms[i]) continue;
    std::set<std::string> allowed = base;
    allowed.erase(state_names[i]);
    allowed.insert("c" + std::to_string(i + 1));
    check_free_vars(solved_forms[i]->expr, allowed, "solved form phi" + std::to_string(i + 1));
  }

  if (param_box.size() != m) throw DimensionError("param_box must cover every parameter");
  if (level_box.size() != n) throw DimensionError("level_box must cover c1..cn");
  if (state_box.size() != n) throw DimensionError("state_box must cover every state");
  param_box.validate();
  level_box.validate();
  state_box.validate();
}

namespace {

Expr parse_field(const toml::Value& v, const std::string& what) {
  if (!v.is_string()) throw LoadError(what + " (line " + std::to_string(v.line) + ") must be a string");
  try {
    return parse(std::get<std::string>(v.data));
  } catch (const ParseError& e) {
    throw ParseError(what + ": " + e.what() + " within the expression", v.line, e.column());
  }
}

std::vector<std::string> string_list(const toml::Section& sec, std::string_view key) {
  const toml::Value* v = sec.find(key);
  if (!v) throw LoadError("[" + sec.name + "] missing '" + std::string(key) + "'");
  if (v->is_string_array()) return std::get<std::vector<std::string>>(v->data);
  if (v->is_number_array() && std::get<std::vector<double>>(v->data).empty()) return {};
  throw LoadError("[" + sec.name + "] '" + std::string(key) + "' must be an array of strings");
}

double number(const toml::Section& sec, std::string_view key, std::optional<double> fallback) {
  const toml::Value* v = sec.find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw LoadError("[" + sec.name + "] missing '" + std::string(key) + "'");
  }
  if (!v->is_number()) throw LoadError("[" + sec.name + "] '" + std::string(key) + "' must be a number");
  return std::get<double>(v->data);
}

std::size_t count(const toml::Section& sec, std::string_view key) {
  double v = number(sec, key, std::nullopt);
  if (v < 0 || v != std::floor(v)) {
    throw LoadError("[" + sec.name + "] '" + std::string(key) + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

ParamBox read_box(const toml::Section* sec, const std::vector<std::string>& names,
                  std::optional<Interval> fallback) {
  ParamBox box;
  box.names = names;
  for (const auto& name : names) {
    const toml::Value* v = sec ? sec->find(name) : nullptr;
    if (!v) {
      if (!fallback) {
        throw LoadError("missing interval for '" + name + "'" +
                        (sec ? " in [" + sec->name + "]" : std::string()));
      }
      box.ranges.push_back(*fallback);
      continue;
    }
    if (!v->is_number_array() || std::get<std::vector<double>>(v->data).size() != 2) {
      throw LoadError("interval for '" + name + "' (line " + std::to_string(v->line) +
                      ") must be [lo, hi]");
    }
    const auto& a = std::get<std::vector<double>>(v->data);
    box.ranges.push_back({a[0], a[1]});
  }
  if (sec) {
    if (const toml::Value* h = sec->find("hat")) {
      if (!h->is_number_array()) throw LoadError("[" + sec->name + "] hat must be a number array");
      box.hat = std::get<std::vector<double>>(h->data);
    }
    for (const auto& [key, v] : sec->entries) {
      if (key != "hat" && std::find(names.begin(), names.end(), key) == names.end()) {
        throw LoadError("[" + sec->name + "] unknown key '" + key + "' (line " +
                        std::to_string(v.line) + ")");
      }
    }
  }
  return box;
}

}  // namespace

SystemDef parse_system(std::string_view text, std::string_view origin) {
  toml::Document doc;
  try {
    doc = toml::parse(text);
  } catch (const ParseError& e) {
    throw ParseError(std::string(origin) + ": " + e.what(), e.line(), e.column());
  }
  static const std::set<std::string> known{"system", "rhs",       "integrals", "solved",
                                           "domain", "param_box", "level_box", "state_box",
                                           "curves"};
  for (const auto& sec : doc.sections) {
    if (!known.count(sec.name)) {
      throw LoadError(std::string(origin) + ": unknown section [" + sec.name + "] (line " +
                      std::to_string(sec.line) + ")");
    }
  }
  const toml::Section* sys = doc.find("system");
  if (!sys) throw LoadError(std::string(origin) + ": missing [system] section");

  SystemDef s;
  s.n = count(*sys, "n");
  s.m = count(*sys, "m");
  s.t0 = number(*sys, "t0", 0.0);
  s.state_names = string_list(*sys, "states");
  s.param_names = sys->find("params") ? string_list(*sys, "params") : std::vector<std::string>{};

  if (const toml::Section* rhs = doc.find("rhs")) {
    for (const auto& [key, v] : rhs->entries) {
      if (std::find(s.state_names.begin(), s.state_names.end(), key) == s.state_names.end()) {
        throw LoadError(std::string(origin) + ": [rhs] key '" + key + "' is not a declared state");
      }
    }
    for (const auto& name : s.state_names) {
      if (const toml::Value* v = rhs->find(name)) s.rhs.push_back(parse_field(*v, "rhs " + name));
    }
  }

  if (const toml::Section* ints = doc.find("integrals")) {
    for (std::size_t i = 1; i <= ints->entries.size() + 1; ++i) {
      const toml::Value* v = ints->find("g" + std::to_string(i));
      if (!v) break;
      s.integrals.push_back(parse_field(*v, "integral g" + std::to_string(i)));
    }
    if (s.integrals.size() != ints->entries.size()) {
      throw LoadError(std::string(origin) + ": [integrals] keys must be g1..gk without gaps");
    }
  }

  s.solved_forms.assign(s.n, std::nullopt);
  if (const toml::Section* solved = doc.find("solved")) {
    for (const auto& [key, v] : solved->entries) {
      std::size_t idx = 0;
      bool ok = key.size() > 3 && key.rfind("phi", 0) == 0;
      if (ok) {
        try {
          idx = std::stoul(key.substr(3));
        } catch (...) {
          ok = false;
        }
      }
      if (!ok || idx < 1 || idx > s.n) {
        throw LoadError(std::string(origin) + ": [solved] key '" + key + "' must be phi1..phi" +
                        std::to_string(s.n));
      }
      s.solved_forms[idx - 1] = SolvedForm{idx - 1, parse_field(v, "solved form " + key)};
    }
  }

  if (const toml::Section* dom = doc.find("domain")) {
    for (const auto& [key, v] : dom->entries) {
      if (key != "guard") throw LoadError(std::string(origin) + ": [domain] unknown key '" + key + "'");
      if (!v.is_string_array()) throw LoadError(std::string(origin) + ": guard must be a string array");
      for (const auto& g : std::get<std::vector<std::string>>(v.data)) {
        toml::Value one{g, v.line};
        s.domain_guards.push_back(parse_field(one, "domain guard"));
      }
    }
  }

  s.param_box = read_box(doc.find("param_box"), s.param_names, std::nullopt);
  s.level_box = read_box(doc.find("level_box"), s.level_names(), std::nullopt);
  s.state_box = read_box(doc.find("state_box"), s.state_names, Interval{-2.0, 2.0});

  if (const toml::Section* curves = doc.find("curves")) {
    for (const auto& [key, v] : curves->entries) {
      if (!v.is_number_array() || std::get<std::vector<double>>(v.data).size() != s.n) {
        throw DimensionError(std::string(origin) + ": [curves] '" + key + "' (line " +
                             std::to_string(v.line) + ") must list " + std::to_string(s.n) +
                             " level values");
      }
      s.curves.push_back(std::get<std::vector<double>>(v.data));
    }
  }

  s.validate();
  if (s.m < s.n) {
    s.warnings.push_back("parameter dimension m = " + std::to_string(s.m) +
                         " is smaller than the state dimension n = " + std::to_string(s.n));
  }
  return s;
}

SystemDef load_system(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open system file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str(), path.string());
}

SystemDef bundled_example() { return parse_system(bundled_example_text(), "example_paper.lyc"); }

// ---------------------------------------------------------------------------
// Integral validation

SampleGrid validation_grid(const SystemDef& s, const ParamPoint& xi, std::size_t per_axis,
                           double span) {
  if (xi.size() != s.m) throw DimensionError("validation_grid: parameter point has wrong length");
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  axes.emplace_back(std::string(kTimeVar), linspace(s.t0, s.t0 + span, per_axis));
  for (std::size_t i = 0; i < s.n; ++i) {
    axes.emplace_back(s.state_names[i],
                      linspace(s.state_box.ranges[i].lo, s.state_box.ranges[i].hi, per_axis));
  }
  SampleGrid g = SampleGrid::cartesian(axes);
  for (std::size_t j = 0; j < s.m; ++j) g = g.with_fixed(s.param_names[j], xi[j]);
  return g;
}

IntegralValidation validate_integrals(const SystemDef& s, const SampleGrid& grid, double tol) {
  const std::size_t n = s.n;
  std::vector<Expr> roots;
  for (const auto& g : s.integrals) roots.push_back(lie_derivative(g, s.rhs, s.state_names, kTimeVar));
  for (const auto& g : s.integrals) {
    for (const auto& x : s.state_names) roots.push_back(diff(g, x));
  }
  roots.insert(roots.end(), s.integrals.begin(), s.integrals.end());
  roots.insert(roots.end(), s.domain_guards.begin(), s.domain_guards.end());
  const auto slots = s.point_slots();
  Program prog(roots, slots);
  const auto map = grid.slot_map(slots);

  struct PointResult {
    bool valid = false;
    std::vector<double> lie;
    bool full_rank = false;
  };
  std::vector<PointResult> results(grid.size());
  parallel_for(grid.size(), [&](std::size_t p) {
    std::vector<double> in(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) in[k] = grid.points[p][map[k]];
    std::vector<double> out(roots.size());
    if (!prog.try_eval(in, out)) return;
    const std::size_t guard0 = n + n * n + n;
    for (std::size_t gi = guard0; gi < out.size(); ++gi) {
      if (!(out[gi] > 0)) return;
    }
    PointResult r;
    r.valid = true;
    r.lie.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n));
    Eigen::MatrixXd jac(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) jac(i, j) = out[n + i * n + j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    r.full_rank = (svd.singularValues().array() > 1e-6).count() == static_cast<Eigen::Index>(n);
    results[p] = std::move(r);
  });

  IntegralValidation v;
  v.integrals.resize(n);
  std::size_t full_rank = 0;
  std::vector<std::size_t> worst(n, 0);
  for (std::size_t i = 0; i < n; ++i) v.integrals[i].name = "g" + std::to_string(i + 1);
  for (std::size_t p = 0; p < results.size(); ++p) {
    const auto& r = results[p];
    if (!r.valid) {
      ++v.skipped_points;
      continue;
    }
    ++v.valid_points;
    if (r.full_rank) ++full_rank;
    for (std::size_t i = 0; i < n; ++i) {
      double a = std::abs(r.lie[i]);
      if (a > v.integrals[i].max_abs_lie) {
        v.integrals[i].max_abs_lie = a;
        worst[i] = p;
      }
    }
  }
  if (v.valid_points == 0) {
    throw DomainError("validate_integrals: every grid point violates the domain");
  }
  v.rank_fraction = static_cast<double>(full_rank) / static_cast<double>(v.valid_points);
  v.ok = v.rank_fraction >= 0.95;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = v.integrals[i];
    c.ok = c.max_abs_lie <= tol;
    if (!c.ok) c.witness = grid.binding(worst[i]);
    v.ok = v.ok && c.ok;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Level constants and the psi-map

bool guards_hold(const SystemDef& s, double t, const StatePoint& x, const ParamPoint& xi) {
  if (s.domain_guards.empty()) return true;
  Program prog(s.domain_guards, s.point_slots());
  std::vector<double> in{t};
  in.insert(in.end(), x.begin(), x.end());
  in.insert(in.end(), xi.begin(), xi.end());
  std::vector<double> out(s.domain_guards.size());
  if (!prog.try_eval(in, out)) return false;
  return std::all_of(out.begin(), out.end(), [](double g) { return g > 0; });
}

namespace {

void check_point_dims(const SystemDef& s, const StatePoint& x, const ParamPoint& xi) {
  if (x.size() != s.n) throw DimensionError("state point has length " + std::to_string(x.size()) +
                                            ", expected " + std::to_string(s.n));
  if (xi.size() != s.m) throw DimensionError("parameter point has length " +
                                             std::to_string(xi.size()) + ", expected " +
                                             std::to_string(s.m));
}

std::vector<double> point_input(const SystemDef&, double t, const StatePoint& x,
                                const ParamPoint& xi) {
  std::vector<double> in{t};
  in.insert(in.end(), x.begin(), x.end());
  in.insert(in.end(), xi.begin(), xi.end());
  return in;
}

}  // namespace

LevelVec c_from_x0(const SystemDef& s, const StatePoint& x0, const ParamPoint& xi) {
  check_point_dims(s, x0, xi);
  if (!guards_hold(s, s.t0, x0, xi)) {
    throw DomainError("c_from_x0: initial state violates the domain guards");
  }
  Program prog(s.integrals, s.point_slots());
  LevelVec c(s.n);
  prog.eval(point_input(s, s.t0, x0, xi), c);
  return c;
}

namespace {

// Residual and Jacobian at x; false when x is outside the domain.
using NewtonSystem = std::function<bool(const StatePoint&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

StatePoint damped_newton(const NewtonSystem& residual, StatePoint x, const NewtonOptions& options) {
  const std::size_t n = x.size();
  Eigen::VectorXd f;
  Eigen::MatrixXd jac;
  if (!residual(x, f, jac)) {
    throw DomainError("psi_solve: initial guess lies outside the domain");
  }
  double r = f.lpNorm<Eigen::Infinity>();
  for (std::size_t iter = 0; iter <= options.max_iter; ++iter) {
    if (r < options.tol) return x;
    if (iter == options.max_iter) break;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smin = sv[sv.size() - 1];
    if (smin <= 0 || sv[0] / smin > options.max_condition) {
      throw SingularJacobian("psi_solve: Jacobian is singular (condition estimate " +
                             std::to_string(smin > 0 ? sv[0] / smin : INFINITY) + ")");
    }
    Eigen::VectorXd step = -svd.solve(f);
    double lambda = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings, lambda *= 0.5) {
      StatePoint trial = x;
      for (std::size_t i = 0; i < n; ++i) trial[i] += lambda * step[static_cast<Eigen::Index>(i)];
      Eigen::VectorXd ft;
      Eigen::MatrixXd jt;
      if (!residual(trial, ft, jt)) continue;
      double rt = ft.lpNorm<Eigen::Infinity>();
      if (rt < r || rt < options.tol) {
        x = std::move(trial);
        f = std::move(ft);
        jac = std::move(jt);
        r = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("psi_solve: no convergence (line search stalled), last residual " +
                                 std::to_string(r),
                             r);
    }
  }
  throw ConvergenceError("psi_solve: no convergence after " + std::to_string(options.max_iter) +
                             " iterations, last residual " + std::to_string(r),
                         r);
}

// x = phi(t0, x; c, xi) through the solved forms. Well posed where an
// integral is a singular ratio on its own leaf (e.g. 0/0 at c_1 = 0).
std::optional<StatePoint> solve_by_forms(const SystemDef& s, const LevelVec& c,
                                         const ParamPoint& xi, const StatePoint& guess,
                                         const NewtonOptions& options) {
  const std::size_t n = s.n;
  std::vector<Expr> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.solved_forms[i]) return std::nullopt;
    roots.push_back(parse(s.state_names[i]) - s.solved_forms[i]->expr);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& x : s.state_names) roots.push_back(diff(roots[i], x));
  }
  std::vector<std::string> slots = s.point_slots();
  for (const auto& name : s.level_names()) slots.push_back(name);
  Program prog(roots, slots);
  std::vector<double> out(roots.size());

  NewtonSystem residual = [&](const StatePoint& x, Eigen::VectorXd& f, Eigen::MatrixXd& jac) {
    std::vector<double> in = point_input(s, s.t0, x, xi);
    in.insert(in.end(), c.begin(), c.end());
    if (!prog.try_eval(in, out) || !guards_hold(s, s.t0, x, xi)) return false;
    f.resize(static_cast<Eigen::Index>(n));
    jac.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      f[static_cast<Eigen::Index>(i)] = out[i];
      for (std::size_t j = 0; j < n; ++j) jac(i, j) = out[n + i * n + j];
    }
    return true;
  };
  try {
    StatePoint x = damped_newton(residual, guess, options);
    // Integrals defined at the root must reproduce c.
    std::vector<double> in = point_input(s, s.t0, x, xi);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      if (!Program(s.integrals[i], s.point_slots()).try_eval(in, std::span<double>(&v, 1)) ||
          !std::isfinite(v)) {
        continue;
      }
      if (std::abs(v - c[i]) > 1e-9 * std::max(1.0, std::abs(c[i]))) return std::nullopt;
    }
    return x;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

StatePoint psi_solve(const SystemDef& s, const LevelVec& c, const ParamPoint& xi,
                     const StatePoint& guess, const NewtonOptions& options) {
  check_point_dims(s, guess, xi);
  if (c.size() != s.n) throw DimensionError("psi_solve: level vector has wrong length");
  const std::size_t n = s.n;
  std::vector<Expr> roots = s.integrals;
  for (const auto& g : s.integrals) {
    for (const auto& x : s.state_names) roots.push_back(diff(g, x));
  }
  Program prog(roots, s.point_slots());
  std::vector<double> out(roots.size());

  NewtonSystem residual = [&](const StatePoint& x, Eigen::VectorXd& f, Eigen::MatrixXd& jac) {
    if (!prog.try_eval(point_input(s, s.t0, x, xi), out)) return false;
    if (!guards_hold(s, s.t0, x, xi)) return false;
    f.resize(static_cast<Eigen::Index>(n));
    jac.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      f[static_cast<Eigen::Index>(i)] = out[i] - c[i];
      for (std::size_t j = 0; j < n; ++j) jac(i, j) = out[n + i * n + j];
    }
    return true;
  };
  try {
    return damped_newton(residual, guess, options);
  } catch (const Error&) {
    if (auto x = solve_by_forms(s, c, xi, guess, options)) return *x;
    throw;
  }
}

// ---------------------------------------------------------------------------
// Leaf distance

SampleGrid leaf_grid(const SystemDef& s, std::size_t i, std::size_t per_axis) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (std::size_t j = 0; j < s.n; ++j) {
    if (j == i) continue;
    axes.emplace_back(s.state_names[j],
                      linspace(s.state_box.ranges[j].lo, s.state_box.ranges[j].hi, per_axis));
  }
  if (axes.empty()) {
    SampleGrid g;
    g.points.assign(1, {});
    return g;
  }
  return SampleGrid::cartesian(axes);
}

double leaf_distance(const SystemDef& s, std::size_t i, double c_a, double c_b, DistanceMode mode,
                     const ParamPoint& xi, const SampleGrid& grid) {
  if (i >= s.n) throw DimensionError("leaf_distance: component out of range");
  if (mode == DistanceMode::Constant) return std::abs(c_a - c_b);

  if (!s.solved_forms[i]) {
    throw Error("leaf_distance: missing solved form for component " + std::to_string(i + 1));
  }
  if (xi.size() != s.m) throw DimensionError("leaf_distance: parameter point has wrong length");
  std::vector<std::string> slots = s.point_slots();
  slots.push_back("c" + std::to_string(i + 1));
  Program prog(s.solved_forms[i]->expr, slots);

  const SampleGrid& g = grid.empty() ? leaf_grid(s, i) : grid;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> in(slots.size(), 0.0);
  in[0] = s.t0;
  for (std::size_t j = 0; j < s.m; ++j) in[1 + s.n + j] = xi[j];
  for (const auto& p : g.points) {
    for (std::size_t k = 0; k < g.names.size(); ++k) {
      auto it = std::find(s.state_names.begin(), s.state_names.end(), g.names[k]);
      if (it == s.state_names.end()) throw UnboundVariable(g.names[k]);
      in[1 + static_cast<std::size_t>(it - s.state_names.begin())] = p[k];
    }
    double a = 0.0, b = 0.0;
    in.back() = c_a;
    if (!prog.try_eval(in, std::span<double>(&a, 1))) continue;
    in.back() = c_b;
    if (!prog.try_eval(in, std::span<double>(&b, 1))) continue;
    best = std::min(best, std::abs(a - b));
  }
  if (!std::isfinite(best)) throw DomainError("leaf_distance: no valid projected grid point");
  return best;
}

}  // namespace lyacanon
