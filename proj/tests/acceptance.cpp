// Acceptance run on the bundled example. Each criterion is decided by its own
// closed-form or finite-difference oracle from support.hpp and prints one
// PASS/FAIL line. Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "lyacanon/pipeline.hpp"
#include "lyacanon/sim.hpp"
#include "lyacanon/stability.hpp"
#include "random_expr.hpp"
#include "support.hpp"

using namespace lyacanon;

namespace {

const ParamPoint kHat{1, 2, 1, 1};
const std::vector<LevelVec> kExampleLevels{{0, 0}, {0.5, 0.5}, {-0.5, 0.5}};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Binding canon_point(double t, double y1, double y2, const LevelVec& c, const ParamPoint& xi) {
  return {{"t", t},       {"y1", y1},     {"y2", y2},     {"c1", c[0]},   {"c2", c[1]},
          {"xi1", xi[0]}, {"xi2", xi[1]}, {"xi3", xi[2]}, {"xi4", xi[3]}};
}

struct Curves {
  std::vector<Trajectory> x;
  std::vector<std::string> errors;
};

// Criterion-3 trajectories, integrated once and shared with criterion 4.
const Curves& paper_curves() {
  static const Curves curves = [] {
    Curves out;
    const SystemDef s = bundled_example();
    for (const auto& c : kExampleLevels) {
      double x1, x2;
      testing::closed_form(0.0, c[0], c[1], testing::Xi{}, x1, x2);
      try {
        const StatePoint x0 = psi_solve(s, c, kHat, {x1 + 0.05, x2 - 0.05});
        out.x.push_back(integrate_original(s, x0, kHat, 12.0, {}, &c));
      } catch (const std::exception& e) {
        out.errors.push_back(e.what());
      }
    }
    return out;
  }();
  return curves;
}

Outcome criterion1() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  const Expr d = diff(cs.rhs_canon[0], "y1");
  double worst = 0.0;
  std::size_t n = 0;
  std::vector<LevelVec> cs_points = cs.level_box.vertices_and_center();
  cs_points.insert(cs_points.end(), kExampleLevels.begin(), kExampleLevels.end());
  for (double t : linspace(0, 12, 49)) {
    for (const auto& c : cs_points) {
      worst = std::max(worst, std::abs(eval(d, canon_point(t, 0, 0, c, kHat)) + 1.0));
      ++n;
    }
  }
  return {worst < 1e-12, "max |d + 1| = " + sci(worst) + " over " + std::to_string(n) + " points"};
}

Outcome criterion2() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  const Expr d = diff(cs.rhs_canon[1], "y2");
  double worst = 0.0, worst_origin = 0.0;
  for (double t : {0.0, 3.0, 6.0, 9.0, 12.0}) {
    for (const auto& c : kExampleLevels) {
      for (double y1 : {-0.2, 0.0, 0.5}) {
        const double got = eval(d, canon_point(t, y1, 0, c, kHat));
        worst = std::max(worst, std::abs(got - testing::printed_criterion(t, y1, c[0], c[1])));
      }
      const double at0 = eval(d, canon_point(t, 0, 0, c, kHat));
      const double printed0 =
          -0.5 * (1 + (2 + std::sin(t) + std::cos(t)) / (2 + std::sin(t) + c[0] * c[1] * std::exp(-t)));
      worst_origin = std::max(worst_origin, std::abs(at0 - printed0));
    }
  }
  return {worst < 1e-9 && worst_origin < 1e-9,
          "max deviation " + sci(worst) + ", at y1 = 0: " + sci(worst_origin)};
}

Outcome criterion3() {
  const Curves& cv = paper_curves();
  if (!cv.errors.empty()) return {false, cv.errors.front()};
  double worst = 0.0;
  for (std::size_t k = 0; k < cv.x.size(); ++k) {
    const Trajectory& tr = cv.x[k];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      double x1, x2;
      testing::closed_form(tr.times[i], tr.c[0], tr.c[1], testing::Xi{}, x1, x2);
      worst = std::max({worst, std::abs(tr.states[i][0] - x1), std::abs(tr.states[i][1] - x2)});
    }
  }
  return {worst < 1e-6, "max deviation from the closed form " + sci(worst)};
}

Outcome criterion4() {
  const Curves& cv = paper_curves();
  if (!cv.errors.empty()) return {false, cv.errors.front()};
  const testing::Xi p;
  double d1 = 0.0, d2 = 0.0;
  std::string undefined;
  for (const Trajectory& tr : cv.x) {
    bool g2_defined = false;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double t = tr.times[i], x1 = tr.states[i][0], x2 = tr.states[i][1];
      d1 = std::max(d1, std::abs(testing::g1(t, x1, x2, p) - tr.c[0]));
      const double v = testing::g2(t, x1, x2, p);
      if (std::isfinite(v) && std::abs(x1 - x2) > 1e-12) {
        d2 = std::max(d2, std::abs(v - tr.c[1]));
        g2_defined = true;
      }
    }
    if (!g2_defined) {
      undefined += "; g2 undefined along c=(" + std::to_string(tr.c[0]) + ", " + std::to_string(tr.c[1]) + ")";
    }
  }
  return {d1 < 1e-6 && d2 < 1e-6 && undefined.empty(),
          "max drift g1 " + sci(d1) + ", g2 " + sci(d2) + undefined};
}

Outcome criterion5() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  double worst = 0.0;
  std::size_t n = 0;
  const auto ys = linspace(-0.4, 1.4, 7);
  for (const auto& c : cs.level_box.vertices_and_center()) {
    for (double t : linspace(0, 12, 13)) {
      for (double other : ys) {
        try {
          worst = std::max(worst, std::abs(eval(cs.rhs_canon[0], canon_point(t, 0, other, c, kHat))));
          worst = std::max(worst, std::abs(eval(cs.rhs_canon[1], canon_point(t, other, 0, c, kHat))));
          n += 2;
        } catch (const DomainError&) {
        }
      }
    }
  }
  return {n > 0 && worst < 1e-9, "max |f_i| on {y_i = 0} " + sci(worst) + " over " + std::to_string(n) + " values"};
}

Outcome criterion6() {
  const SystemDef s = bundled_example();
  const CanonicalSystem cs = build_canonical(s);
  const LevelVec c{0.5, 0.5};
  double worst = 0.0;
  for (const StatePoint& y0 : {StatePoint{0, 0}, StatePoint{0.1, -0.1}}) {
    double x1, x2;
    testing::forward(0.0, y0[0], y0[1], c[0], c[1], testing::Xi{}, x1, x2);
    const Trajectory x = integrate_original(s, {x1, x2}, kHat, 12.0);
    const Trajectory y = integrate_canonical(cs, y0, c, kHat, 12.0);
    for (std::size_t i = 0; i < y.times.size(); ++i) {
      double f1, f2;
      testing::forward(y.times[i], y.states[i][0], y.states[i][1], c[0], c[1], testing::Xi{}, f1, f2);
      worst = std::max({worst, std::abs(f1 - x.states[i][0]), std::abs(f2 - x.states[i][1])});
    }
  }
  return {worst < 1e-5, "max |forward(y(t)) - x(t)| " + sci(worst)};
}

Outcome criterion7() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  const auto omega = cs.level_box.vertices_and_center();
  const testing::Xi p;
  double min_v = INFINITY, max_dv = -INFINITY;
  std::size_t bad = 0;
  const auto ys = linspace(-0.4, 1.4, 10);
  for (const auto& c : omega) {
    for (double t : linspace(0, 12, 25)) {
      for (double y1 : ys) {
        for (double y2 : ys) {
          const double w = y1 * y1 + y2 * y2;
          if (std::sqrt(w) < 1e-6) continue;
          double f1, f2;
          testing::canonical_rhs(t, y1, y2, c[0], c[1], p, f1, f2);
          if (!std::isfinite(f1) || !std::isfinite(f2)) continue;
          const double v = w * (1 + std::exp(-t));
          const double dv = -std::exp(-t) * w + (1 + std::exp(-t)) * (2 * y1 * f1 + 2 * y2 * f2);
          min_v = std::min(min_v, v);
          max_dv = std::max(max_dv, dv);
          if (!(v > 0) || !(dv < 0)) ++bad;
        }
      }
    }
  }
  // W strictly decreasing over accepted steps of perturbed trajectories.
  std::size_t increases = 0, trajectories = 0;
  for (const auto& c : omega) {
    for (const StatePoint& y0 : default_perturbations(2)) {
      const Trajectory tr = integrate_canonical(cs, y0, c, kHat, 12.0);
      ++trajectories;
      for (std::size_t k = 1; k < tr.step_states.size(); ++k) {
        const auto& a = tr.step_states[k - 1];
        const auto& b = tr.step_states[k];
        if (std::hypot(a[0], a[1]) < 1e-9) break;
        if (!(b[0] * b[0] + b[1] * b[1] < a[0] * a[0] + a[1] * a[1])) ++increases;
      }
    }
  }
  return {bad == 0 && increases == 0,
          "min V " + sci(min_v) + ", max dV/dt " + sci(max_dv) + ", " + std::to_string(bad) +
              " sign violations, " + std::to_string(increases) + " W increases over " +
              std::to_string(trajectories) + " trajectories"};
}

Outcome criterion8() {
  const testing::Xi p;
  std::size_t bad = 0, n = 0;
  const auto ys = interior_points(-0.5, 1.5, 9);
  std::vector<double> y2s = ys;
  y2s.push_back(0.0);
  for (const auto& c : kExampleLevels) {
    for (double t : linspace(0, 12, 25)) {
      for (double y1 : ys) {
        for (double y2 : y2s) {
          double f1, f2;
          testing::canonical_rhs(t, y1, y2, c[0], c[1], p, f1, f2);
          if (!std::isfinite(f2)) continue;
          ++n;
          const bool ok = y2 == 0 ? std::abs(f2) <= 1e-9 : (y2 > 0 ? f2 < 0 : f2 > 0);
          if (!ok) ++bad;
        }
      }
    }
  }
  return {n > 0 && bad == 0, std::to_string(bad) + " violations over " + std::to_string(n) + " points"};
}

Outcome criterion9() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  double worst = 0.0;
  for (const auto& c : cs.level_box.vertices_and_center()) {
    const Trajectory tr = integrate_canonical(cs, {0.3, 0.2}, c, kHat, 12.0);
    const auto& y = tr.states.back();
    worst = std::max(worst, std::hypot(y[0], y[1]) / std::hypot(0.3, 0.2));
  }
  return {worst < 1e-2, "max ||y(12)|| / ||y(0)|| " + sci(worst)};
}

Outcome criterion10() {
  std::mt19937_64 rng(2024);
  const char* vars[] = {"u", "v", "w"};
  int fd_cases = 0, fd_bad = 0;
  while (fd_cases < 1000) {
    const Expr e = testing::random_expr(rng, 1 + static_cast<int>(rng() % 4));
    const std::string v = vars[rng() % 3];
    Binding b = testing::random_point(rng);
    double exact;
    try {
      exact = eval(diff(e, v), b);
    } catch (const DomainError&) {
      continue;
    }
    Binding lo = b, hi = b;
    lo[v] -= 1e-6;
    hi[v] += 1e-6;
    const double fd = (eval(e, hi) - eval(e, lo)) / 2e-6;
    ++fd_cases;
    if (std::abs(exact - fd) > 1e-5 * (1 + std::abs(exact))) ++fd_bad;
  }
  int simp_cases = 0, simp_bad = 0;
  while (simp_cases < 1000) {
    const Expr e = testing::random_expr(rng, 1 + static_cast<int>(rng() % 4));
    const Binding b = testing::random_point(rng);
    double a;
    try {
      a = eval(e, b);
    } catch (const DomainError&) {
      continue;
    }
    ++simp_cases;
    if (std::abs(eval(simplify(e), b) - a) > 1e-12 * std::max(1.0, std::abs(a))) ++simp_bad;
  }

  const SystemDef s = bundled_example();
  std::uniform_real_distribution<double> c1d(-1, 1), c2d(0, 1), u(0.9, 1.1), w(1.8, 2.2);
  double psi_err = 0.0;
  int psi_ok = 0;
  for (int k = 0; k < 100; ++k) {
    const testing::Xi p{u(rng), w(rng), u(rng), u(rng)};
    const ParamPoint xi{p.x1, p.x2, p.x3, p.x4};
    const LevelVec c{c1d(rng), c2d(rng)};
    double x1, x2;
    testing::closed_form(0.0, c[0], c[1], p, x1, x2);
    try {
      const StatePoint x = psi_solve(s, c, xi, {x1 + 0.03, x2 - 0.03});
      psi_err = std::max({psi_err, std::abs(testing::g1(0, x[0], x[1], p) - c[0]),
                          std::abs(testing::g2(0, x[0], x[1], p) - c[1])});
      ++psi_ok;
    } catch (const Error&) {
    }
  }

  const CanonicalSystem cs = build_canonical(s);
  const auto omega = cs.level_box.vertices_and_center();
  std::vector<ParamPoint> wide;
  for (double x1 : {-1.0, -0.5, 0.0, 0.5, 1.0}) wide.push_back({x1, 2, 1, 1});
  const RegionScan full = scan_region(cs, wide, omega);
  const std::vector<ParamPoint> sub{wide[0], wide[2], wide[4]};
  const RegionScan part = scan_region(cs, sub, omega);
  bool monotone = !(full.inclusion && !part.inclusion);
  for (const auto& a : part.per_curve) {
    for (const auto& b : full.per_curve) {
      if (a.c == b.c && a.xi == b.xi && a.stable != b.stable) monotone = false;
    }
  }
  bool degeneracy = true;
  for (const auto& pt : full.per_curve) {
    if (pt.xi[0] <= 0 && pt.components[0] == ComponentVerdict::StableEvidence) degeneracy = false;
    if (pt.xi[0] == 0 && pt.components[0] != ComponentVerdict::Degenerate) degeneracy = false;
  }

  const bool pass = fd_bad == 0 && simp_bad == 0 && psi_ok == 100 && psi_err < 1e-9 && monotone && degeneracy;
  return {pass, "fd " + std::to_string(fd_cases - fd_bad) + "/1000, simplify " +
                    std::to_string(simp_cases - simp_bad) + "/1000, psi " + std::to_string(psi_ok) +
                    "/100 (max residual " + sci(psi_err) + "), monotone " + (monotone ? "yes" : "no") +
                    ", xi1 <= 0 flagged " + (degeneracy ? "yes" : "no")};
}

Outcome criterion11() {
  const CanonicalSystem cs = build_canonical(bundled_example());
  const auto xi_grid = cs.param_box.grid(3);
  const RegionScan scan = scan_region(cs, xi_grid, cs.level_box.vertices_and_center());
  std::size_t stable = 0;
  for (const auto& p : scan.per_curve) stable += p.stable ? 1 : 0;
  return {xi_grid.size() == 81 && scan.inclusion,
          std::to_string(stable) + "/" + std::to_string(scan.per_curve.size()) +
              " points stable-evidence (" + scan.label + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double limit;  // seconds, 0 when unbounded
  };
  const std::vector<Criterion> criteria{
      {1, "df1/dy1 on {y=0} equals -1", criterion1, 1.0},
      {2, "df2/dy2 on {y2=0} matches the printed criterion", criterion2, 1.0},
      {3, "integral curves match the closed form", criterion3, 5.0},
      {4, "both first integrals conserved", criterion4, 0.0},
      {5, "flatness of the canonical components", criterion5, 0.0},
      {6, "canonical and original trajectories agree", criterion6, 0.0},
      {7, "Lyapunov function verified", criterion7, 30.0},
      {8, "A-mapping sign pattern of f2", criterion8, 0.0},
      {9, "canonical decay", criterion9, 0.0},
      {10, "property suites", criterion10, 0.0},
      {11, "stable evidence over the parameter box", criterion11, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit > 0 && secs >= c.limit) {
      o.pass = false;
      o.detail += "; runtime " + sci(secs) + " s exceeds " + sci(c.limit) + " s";
    }
    std::printf("%s criterion %d: %s (%s; %.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    if (!o.pass) ++failed;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
