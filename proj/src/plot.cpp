#include "lyacanon/plot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lyacanon/program.hpp"

namespace lyacanon {

std::string_view to_string(PlotKind k) {
  switch (k) {
    case PlotKind::IntegralCurves: return "integral-curves";
    case PlotKind::LevelSections: return "level-sections";
    case PlotKind::Criterion3d: return "criterion-3d";
    case PlotKind::Criterion1d: return "criterion-1d";
    case PlotKind::RhsSurface: return "rhs-surface";
  }
  return "?";
}

std::optional<PlotKind> plot_kind_from_string(std::string_view s) {
  for (PlotKind k : {PlotKind::IntegralCurves, PlotKind::LevelSections, PlotKind::Criterion3d,
                     PlotKind::Criterion1d, PlotKind::RhsSurface}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> canon_input(double t, const StatePoint& y,
                                const LevelVec& c, const ParamPoint& xi) {
  std::vector<double> in{t};
  in.insert(in.end(), y.begin(), y.end());
  in.insert(in.end(), c.begin(), c.end());
  in.insert(in.end(), xi.begin(), xi.end());
  return in;
}

/// f_i (or its derivative) plus the guards; NaN outside the domain.
class GuardedEval {
 public:
  GuardedEval(const CanonicalSystem& cs, const Expr& e) : n_guards_(cs.guards.size()) {
    std::vector<Expr> roots{e};
    roots.insert(roots.end(), cs.guards.begin(), cs.guards.end());
    prog_ = Program(roots, cs.canon_slots());
    out_.resize(roots.size());
  }
  double operator()(const std::vector<double>& in) {
    if (!prog_.try_eval(in, out_)) return kNaN;
    for (std::size_t k = 1; k <= n_guards_; ++k) {
      if (!(out_[k] > 0)) return kNaN;
    }
    return out_[0];
  }

 private:
  std::size_t n_guards_;
  Program prog_;
  std::vector<double> out_;
};

Expr restricted_derivative(const CanonicalSystem& cs, std::size_t i) {
  if (i >= cs.n) throw Error("plot: component out of range");
  return simplify(substitute(diff(cs.rhs_canon[i], cs.canon_names[i]),
                             {{cs.canon_names[i], Expr::constant(0)}}));
}

}  // namespace

PlotData integral_curves(const SweepResult& sweep) {
  PlotData d;
  d.kind = PlotKind::IntegralCurves;
  d.columns = sweep.level_names;
  d.columns.push_back(std::string(kTimeVar));
  d.columns.insert(d.columns.end(), sweep.state_names.begin(), sweep.state_names.end());
  for (const auto& pt : sweep.points) {
    if (!pt.ok) continue;
    const auto& tr = pt.trajectory;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      std::vector<double> row = pt.c;
      row.push_back(tr.times[k]);
      row.insert(row.end(), tr.states[k].begin(), tr.states[k].end());
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

PlotData level_sections(const SystemDef& s, const LevelVec& c, const ParamPoint& xi,
                        std::span<const double> times, std::size_t per_axis) {
  if (c.size() != s.n || xi.size() != s.m) throw DimensionError("level_sections: bad point size");
  PlotData d;
  d.kind = PlotKind::LevelSections;
  d.columns = {"section", std::string(kTimeVar)};
  d.columns.insert(d.columns.end(), s.state_names.begin(), s.state_names.end());

  const auto slots = s.point_slots();
  auto level_slots = slots;
  const auto levels = s.level_names();
  level_slots.insert(level_slots.end(), levels.begin(), levels.end());

  for (std::size_t i = 0; i < s.n; ++i) {
    std::vector<Expr> gi{s.integrals[i], diff(s.integrals[i], s.state_names[i])};
    gi.insert(gi.end(), s.domain_guards.begin(), s.domain_guards.end());
    Program g(gi, slots);
    std::optional<Program> solved;
    if (s.solved_forms[i]) solved.emplace(s.solved_forms[i]->expr, level_slots);

    std::vector<std::pair<std::string, std::vector<double>>> axes;
    for (std::size_t j = 0; j < s.n; ++j) {
      if (j != i) {
        axes.emplace_back(s.state_names[j], linspace(s.state_box.ranges[j].lo,
                                                     s.state_box.ranges[j].hi, per_axis));
      }
    }
    const SampleGrid others = SampleGrid::cartesian(axes);
    const std::size_t count = axes.empty() ? 1 : others.size();

    std::vector<double> out(gi.size());
    for (double t : times) {
      for (std::size_t p = 0; p < count; ++p) {
        std::vector<double> in(slots.size() + s.n);
        in[0] = t;
        std::size_t a = 0;
        for (std::size_t j = 0; j < s.n; ++j) {
          in[1 + j] = j == i ? s.state_box.ranges[i].mid() : others.points[p][a++];
        }
        std::copy(xi.begin(), xi.end(), in.begin() + 1 + s.n);
        std::copy(c.begin(), c.end(), in.begin() + 1 + s.n + s.m);
        bool found = false;
        double xi_val = 0.0;
        if (solved && solved->try_eval(in, std::span(&xi_val, 1))) {
          in[1 + i] = xi_val;
          found = true;
        } else {
          for (int it = 0; it < 50; ++it) {
            if (!g.try_eval(std::span(in).first(slots.size()), out) || out[1] == 0.0) break;
            const double delta = (out[0] - c[i]) / out[1];
            in[1 + i] -= delta;
            if (std::abs(delta) <= 1e-13 * std::max(1.0, std::abs(in[1 + i]))) {
              found = true;
              break;
            }
          }
        }
        if (!found) continue;
        if (!g.try_eval(std::span(in).first(slots.size()), out)) continue;
        if (std::abs(out[0] - c[i]) > 1e-8) continue;
        bool guards_ok = true;
        for (std::size_t k = 2; k < out.size(); ++k) guards_ok = guards_ok && out[k] > 0;
        if (!guards_ok) continue;
        std::vector<double> row{static_cast<double>(i + 1), t};
        row.insert(row.end(), in.begin() + 1, in.begin() + 1 + s.n);
        d.rows.push_back(std::move(row));
      }
    }
  }
  return d;
}

PlotData criterion_3d(const CanonicalSystem& cs, std::size_t i, std::size_t j,
                      std::span<const LevelVec> c_points, const ParamPoint& xi,
                      std::span<const double> times, std::span<const double> yj_values) {
  if (j >= cs.n || j == i) throw Error("criterion_3d: sweep axis must be another component");
  GuardedEval f(cs, restricted_derivative(cs, i));
  PlotData d;
  d.kind = PlotKind::Criterion3d;
  d.columns = cs.level_names;
  d.columns.push_back(std::string(kTimeVar));
  d.columns.push_back(cs.canon_names[j]);
  d.columns.push_back("value");
  for (const auto& c : c_points) {
    for (double t : times) {
      for (double yj : yj_values) {
        StatePoint y(cs.n, 0.0);
        y[j] = yj;
        std::vector<double> row = c;
        row.push_back(t);
        row.push_back(yj);
        row.push_back(f(canon_input(t, y, c, xi)));
        d.rows.push_back(std::move(row));
      }
    }
  }
  return d;
}

PlotData criterion_1d(const CanonicalSystem& cs, std::size_t i, std::span<const LevelVec> c_points,
                      const ParamPoint& xi, std::span<const double> times) {
  GuardedEval f(cs, restricted_derivative(cs, i));
  PlotData d;
  d.kind = PlotKind::Criterion1d;
  d.columns = cs.level_names;
  d.columns.push_back(std::string(kTimeVar));
  d.columns.push_back("value");
  for (const auto& c : c_points) {
    for (double t : times) {
      std::vector<double> row = c;
      row.push_back(t);
      row.push_back(f(canon_input(t, StatePoint(cs.n, 0.0), c, xi)));
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

PlotData rhs_surface(const CanonicalSystem& cs, std::size_t i, const LevelVec& c,
                     const ParamPoint& xi, std::span<const double> times,
                     std::span<const double> y_values) {
  if (i >= cs.n) throw Error("rhs_surface: component out of range");
  GuardedEval f(cs, cs.rhs_canon[i]);
  PlotData d;
  d.kind = PlotKind::RhsSurface;
  d.columns = {std::string(kTimeVar)};
  d.columns.insert(d.columns.end(), cs.canon_names.begin(), cs.canon_names.end());
  d.columns.push_back("s" + std::to_string(i + 1));
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& y : cs.canon_names) {
    axes.emplace_back(y, std::vector<double>(y_values.begin(), y_values.end()));
  }
  const SampleGrid grid = SampleGrid::cartesian(axes);
  for (double t : times) {
    for (const auto& y : grid.points) {
      std::vector<double> row{t};
      row.insert(row.end(), y.begin(), y.end());
      row.push_back(f(canon_input(t, y, c, xi)));
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

std::string format_csv(const PlotData& data) {
  std::string out;
  for (std::size_t k = 0; k < data.columns.size(); ++k) {
    if (k) out += ',';
    out += data.columns[k];
  }
  out += '\n';
  char buf[64];
  for (const auto& row : data.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      if (std::isnan(row[k])) {
        out += "NaN";
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.12g", row[k]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void emit_plot_data(const PlotData& data, PlotKind kind, const std::filesystem::path& path) {
  if (data.kind != kind) {
    throw Error("plot data of kind " + std::string(to_string(data.kind)) +
                " cannot be written as " + std::string(to_string(kind)));
  }
  if (data.columns.empty()) throw Error("plot data has no columns");
  for (const auto& row : data.rows) {
    if (row.size() != data.columns.size()) throw Error("plot row width does not match header");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << format_csv(data);
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace lyacanon
