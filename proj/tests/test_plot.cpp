#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lyacanon/pipeline.hpp"
#include "lyacanon/plot.hpp"
#include "lyacanon/report.hpp"
#include "support.hpp"

using namespace lyacanon;

namespace {

const ParamPoint kHat{1, 2, 1, 1};
const std::vector<LevelVec> kExampleLevels{{0, 0}, {0.5, 0.5}, {-0.5, 0.5}};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("plot kinds round-trip through their names") {
  for (PlotKind k : {PlotKind::IntegralCurves, PlotKind::LevelSections, PlotKind::Criterion3d,
                     PlotKind::Criterion1d, PlotKind::RhsSurface}) {
    CHECK(plot_kind_from_string(to_string(k)) == k);
  }
  CHECK_FALSE(plot_kind_from_string("bogus").has_value());
}

TEST_CASE("criterion plots reproduce the printed formula") {
  const CanonicalSystem& cs = testing::example_canonical();
  const std::vector<double> times{0, 3, 6, 9, 12};
  const std::vector<double> ys{-0.2, 0, 0.5};
  const PlotData d3 = criterion_3d(cs, 1, 0, kExampleLevels, kHat, times, ys);
  CHECK(d3.columns == std::vector<std::string>{"c1", "c2", "t", "y1", "value"});
  CHECK(d3.rows.size() == kExampleLevels.size() * times.size() * ys.size());
  double worst = 0.0;
  for (const auto& r : d3.rows) {
    worst = std::max(worst, std::abs(r[4] - testing::printed_criterion(r[2], r[3], r[0], r[1])));
  }
  CHECK(worst < 1e-9);

  const PlotData d1 = criterion_1d(cs, 1, kExampleLevels, kHat, times);
  CHECK(d1.columns == std::vector<std::string>{"c1", "c2", "t", "value"});
  for (const auto& r : d1.rows) {
    CHECK(r[3] == doctest::Approx(testing::printed_criterion(r[2], 0, r[0], r[1])).epsilon(1e-12));
  }
}

TEST_CASE("rhs surface and level sections") {
  const CanonicalSystem& cs = testing::example_canonical();
  const std::vector<double> times{0, 6};
  const std::vector<double> ys{-0.5, 0, 0.5};
  const PlotData surf = rhs_surface(cs, 1, {0.5, 0.5}, kHat, times, ys);
  CHECK(surf.columns == std::vector<std::string>{"t", "y1", "y2", "s2"});
  CHECK(surf.rows.size() == times.size() * ys.size() * ys.size());
  const testing::Xi p;
  for (const auto& r : surf.rows) {
    double f1, f2;
    testing::canonical_rhs(r[0], r[1], r[2], 0.5, 0.5, p, f1, f2);
    CHECK(r[3] == doctest::Approx(f2).epsilon(1e-9));
  }

  const SystemDef s = bundled_example();
  const PlotData sec = level_sections(s, {0.5, 0.5}, kHat, times, 11);
  CHECK(sec.columns.front() == "section");
  std::size_t valid = 0;
  for (const auto& r : sec.rows) {
    if (std::isnan(r[2]) || std::isnan(r[3])) continue;
    ++valid;
    const int i = static_cast<int>(r[0]);
    const double g = i == 1 ? testing::g1(r[1], r[2], r[3], p) : testing::g2(r[1], r[2], r[3], p);
    CHECK(g == doctest::Approx(0.5).epsilon(1e-7));
  }
  CHECK(valid > 0);
}

TEST_CASE("csv formatting and emission") {
  PlotData d;
  d.kind = PlotKind::Criterion1d;
  d.columns = {"c1", "t", "value"};
  d.rows = {{0.5, 0.0, -1.25}, {0.5, 1.0, std::nan("")}};
  CHECK(format_csv(d) == "c1,t,value\n0.5,0,-1.25\n0.5,1,NaN\n");

  const auto dir = std::filesystem::temp_directory_path() / "lyacanon_plot_test";
  std::filesystem::create_directories(dir);
  emit_plot_data(d, PlotKind::Criterion1d, dir / "a.csv");
  CHECK(slurp(dir / "a.csv") == format_csv(d));
  CHECK_THROWS(emit_plot_data(d, PlotKind::RhsSurface, dir / "b.csv"));
  PlotData ragged = d;
  ragged.rows.push_back({1.0});
  CHECK_THROWS(emit_plot_data(ragged, PlotKind::Criterion1d, dir / "c.csv"));
}

TEST_CASE("simulation output is deterministic") {
  const SystemDef s = bundled_example();
  const CanonicalSystem& cs = testing::example_canonical();
  PipelineConfig cfg;
  cfg.oracle = true;
  const SimulationReport a = simulate(s, cs, cfg);
  const SimulationReport b = simulate(s, cs, cfg);
  CHECK(a.ok);
  REQUIRE(a.plots.size() == 6);
  const char* names[] = {"graph1_integral_curves.csv", "graph2_level_sections.csv",
                         "graph3_criterion_3d.csv",    "graph4_criterion_1d.csv",
                         "graph5_rhs_surface.csv",     "graph6_rhs_surface.csv"};
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(a.plots[k].file == names[k]);
    CHECK(format_csv(a.plots[k].data) == format_csv(b.plots[k].data));
  }
  for (double dev : a.oracle_deviation) CHECK(dev < 1e-6);

  const PlotData& curves = a.plots[0].data;
  CHECK(curves.columns == std::vector<std::string>{"c1", "c2", "t", "x1", "x2"});
  for (const auto& r : curves.rows) {
    double x1, x2;
    testing::closed_form(r[2], r[0], r[1], testing::Xi{}, x1, x2);
    CHECK(std::abs(r[3] - x1) < 1e-6);
    CHECK(std::abs(r[4] - x2) < 1e-6);
  }

  PipelineConfig empty = cfg;
  empty.curves = std::vector<LevelVec>{};
  const SimulationReport e = simulate(s, cs, empty);
  CHECK(e.ok);
  for (const auto& p : e.plots) CHECK(p.data.rows.empty());
}

TEST_CASE("pipeline configuration") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate(2));
  CHECK_FALSE(cfg.loosened());
  CHECK(cfg.trajectory_tol() == 1e-6);
  cfg.rel_tol = 1e-4;
  CHECK(cfg.loosened());
  CHECK(cfg.trajectory_tol() == 1e-3);
  cfg.rel_tol = 1.0;
  CHECK_THROWS(cfg.validate(2));
  cfg.rel_tol = 1e-8;
  cfg.lyapunov.lambda = 0.0;
  CHECK_THROWS(cfg.validate(2));

  const auto pert = default_perturbations(2);
  CHECK(pert.front() == StatePoint{0.3, 0.2});
  CHECK(xi_scan_points(bundled_example().param_box, 1.0, 3).size() == 81);
  const SystemDef s = bundled_example();
  CHECK(curve_points(s, PipelineConfig{}) == kExampleLevels);
}

TEST_CASE("reports carry the documented keys") {
  const SystemDef s = bundled_example();
  const CanonicalSystem& cs = testing::example_canonical();
  PipelineConfig cfg;
  const Json canon = canonical_report(cs, check_canonical(cs, cfg));
  CHECK(canon["stages"].size() == 2);
  CHECK(canon["stages"][0].contains("phi"));
  CHECK(canon["rhs_canon"].size() == 2);
  CHECK(canon["forward_map"].size() == 2);
  CHECK(canon["flatness"][1]["max_abs"].get<double>() < 1e-9);
  CHECK(canon["ok"].get<bool>());

  const StabilityReport st = assess_stability(cs, cfg);
  const Json j = stability_report(st, cfg.lyapunov);
  CHECK(j["ok"].get<bool>());
  CHECK(j["components"][0]["rank"] == 1);
  CHECK(j["components"][1]["rank"] == 1);
  CHECK(j["components"][0]["sign"] == "-");
  CHECK(j["components"][1]["sign"] == "-");
  CHECK(j["components"][1]["parity"] == "odd");
  CHECK(j["components"][1]["amap"]["violations"] == 0);
  CHECK(j["lyapunov"]["min_V"].get<double>() > 0);
  CHECK(j["lyapunov"]["max_dVdt"].get<double>() < 0);
  CHECK(j["scan"]["inclusion"].get<bool>());
  CHECK(j["scan"]["per_curve"].size() == 81 * 5);
  CHECK(j["scan"]["per_system"].size() == 81);

  const Json v = validation_report(s, kHat, validate_integrals(s, validation_grid(s, kHat)));
  CHECK(v["ok"].get<bool>());
  CHECK(v["drift"].get<double>() < 1e-8);
}
