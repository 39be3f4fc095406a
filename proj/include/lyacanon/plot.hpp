#pragma once

// Tabular plot data written as CSV (header row, %.12g, comma, LF).
//
// Column layouts per kind:
//   integral-curves  c1..cn, t, x1..xn          one block per level point
//   level-sections   section, t, x1..xn         section = 1-based integral index
//   criterion-3d     c1..cn, t, y<j>, value     d f_i/dy_i on {y_i = 0}, y<j> swept
//   criterion-1d     c1..cn, t, value           d f_i/dy_i on {y = 0}
//   rhs-surface      t, y1..yn, s<i>            s<i> = f_i of the canonical system

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyacanon/cascade.hpp"
#include "lyacanon/sim.hpp"

namespace lyacanon {

enum class PlotKind { IntegralCurves, LevelSections, Criterion3d, Criterion1d, RhsSurface };

std::string_view to_string(PlotKind k);
std::optional<PlotKind> plot_kind_from_string(std::string_view s);

struct PlotData {
  PlotKind kind = PlotKind::IntegralCurves;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Successful sweep points, one block per (c, xi) in sweep order.
PlotData integral_curves(const SweepResult& sweep);

/// Points of every leaf {g_i(t, x) = c_i}: for each t and each grid point of
/// the other states, x_i is obtained from the solved form or by Newton.
PlotData level_sections(const SystemDef& s, const LevelVec& c, const ParamPoint& xi,
                        std::span<const double> times, std::size_t per_axis = 21);

/// dy_i-derivative of f_i restricted to y_i = 0 over t and y_j; other y = 0.
PlotData criterion_3d(const CanonicalSystem& cs, std::size_t i, std::size_t j,
                      std::span<const LevelVec> c_points, const ParamPoint& xi,
                      std::span<const double> times, std::span<const double> yj_values);

/// dy_i-derivative of f_i restricted to y = 0 over t.
PlotData criterion_1d(const CanonicalSystem& cs, std::size_t i, std::span<const LevelVec> c_points,
                      const ParamPoint& xi, std::span<const double> times);

/// f_i over a cartesian y grid at each of `times`.
PlotData rhs_surface(const CanonicalSystem& cs, std::size_t i, const LevelVec& c,
                     const ParamPoint& xi, std::span<const double> times,
                     std::span<const double> y_values);

/// CSV text of the table.
std::string format_csv(const PlotData& data);

/// Writes `data` to `path`; throws Error when `data` is not of `kind` or its
/// rows do not match the header.
void emit_plot_data(const PlotData& data, PlotKind kind, const std::filesystem::path& path);

}  // namespace lyacanon
