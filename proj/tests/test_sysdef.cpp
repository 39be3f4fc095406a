#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace lyacanon;

TEST_CASE("bundled example loads") {
  const SystemDef s = load_system(testing::example_file());
  CHECK(s.n == 2);
  CHECK(s.m == 4);
  CHECK(s.t0 == 0.0);
  CHECK(s.state_names == std::vector<std::string>{"x1", "x2"});
  CHECK(s.param_box.nominal() == std::vector<double>{1, 2, 1, 1});
  CHECK(s.level_box.ranges[0].lo == -1);
  CHECK(s.level_box.ranges[1].hi == 1);
  REQUIRE(s.curves.size() == 3);
  CHECK(s.curves[1] == std::vector<double>{0.5, 0.5});
  CHECK(s.warnings.empty());
  CHECK(bundled_example().rhs.size() == 2);
  CHECK(to_string(bundled_example().integrals[0]) == to_string(s.integrals[0]));
}

TEST_CASE("load errors") {
  CHECK_THROWS_AS(load_system(testing::data_file("missing_integral.lyc")), DimensionError);
  try {
    load_system(testing::data_file("undeclared.lyc"));
    FAIL("expected a free-variable error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("x3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_system(testing::data_file("does_not_exist.lyc")), LoadError);
  CHECK_THROWS_AS(parse_system("[system]\nn = 1\nm = 0\nstates = [\"x\"]\n[rhs]\nx = \"1 +\"\n"
                               "[integrals]\ng1 = \"x\"\n[level_box]\nc1 = [0, 1]\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_system("[system]\nn = 1\nm = 0\nstates = [\"x\"]\n[bogus]\n"), LoadError);
  CHECK_THROWS(parse_system("[system]\nn = 1\nm = 0\nstates = [\"x\"]\n[rhs]\nx = \"0\"\n"
                            "[integrals]\ng1 = \"x\"\n[level_box]\nc1 = [1, 0]\n"));
  CHECK_THROWS_AS(parse_system("[system]\nn = 1\nm = 0\nstates = [\"x\"]\n[rhs]\nx = \"0\"\n"
                               "[integrals]\ng1 = \"x\"\n[level_box]\nc1 = [0, 1]\n"
                               "[curves]\na = [1, 2]\n"),
                  DimensionError);
}

TEST_CASE("small parameter dimension is a warning") {
  const SystemDef s = load_system(testing::data_file("unsolvable.lyc"));
  CHECK(s.m == 0);
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("integral validation") {
  const SystemDef s = bundled_example();
  const ParamPoint xi{1, 2, 1, 1};
  const SampleGrid grid = validation_grid(s, xi);
  const IntegralValidation v = validate_integrals(s, grid);
  CHECK(v.ok);
  CHECK(v.valid_points > 0);
  CHECK(v.rank_fraction >= 0.95);
  for (const auto& c : v.integrals) CHECK(c.max_abs_lie < 1e-8);

  // Oracle: Lie derivative by central differences along the flow.
  double worst = 0.0;
  const testing::Xi p;
  for (double t : {0.0, 2.5, 7.0}) {
    for (double x1 : {1.0, 2.0, 3.0}) {
      for (double x2 : {0.6, 1.3, 2.4}) {
        if (std::abs(x1 - x2) < 0.05) continue;
        double f1, f2;
        testing::rhs(t, x1, x2, p, f1, f2);
        const double h = 1e-6;
        const double d =
            (testing::g1(t + h, x1 + h * f1, x2 + h * f2, p) - testing::g1(t - h, x1 - h * f1, x2 - h * f2, p)) /
            (2 * h);
        const double d2 =
            (testing::g2(t + h, x1 + h * f1, x2 + h * f2, p) - testing::g2(t - h, x1 - h * f1, x2 - h * f2, p)) /
            (2 * h);
        worst = std::max({worst, std::abs(d) / std::max(1.0, testing::eta(t, p)), std::abs(d2)});
      }
    }
  }
  CHECK(worst < 1e-4);

  SystemDef bad = s;
  bad.integrals[0] = parse("x1 + x2");
  const IntegralValidation vb = validate_integrals(bad, grid);
  CHECK_FALSE(vb.ok);
  CHECK(vb.integrals[0].witness.has_value());

  const SystemDef trivial = load_system(testing::data_file("trivial.lyc"));
  const IntegralValidation vt = validate_integrals(trivial, validation_grid(trivial, {}));
  CHECK(vt.ok);
  CHECK(vt.integrals[0].max_abs_lie == 0.0);
}

TEST_CASE("levels from initial states") {
  const SystemDef s = bundled_example();
  const LevelVec c = c_from_x0(s, {2.0, 1.5}, {1, 2, 1, 1});
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(c_from_x0(s, {1.5, 1.5}, {1, 2, 1, 1}), DomainError);
  CHECK_THROWS_AS(c_from_x0(s, {1.5}, {1, 2, 1, 1}), DimensionError);
}

TEST_CASE("psi_solve") {
  const SystemDef s = bundled_example();
  const ParamPoint xi{1, 2, 1, 1};
  const StatePoint x = psi_solve(s, {0.5, 0.5}, xi, {2.0, 1.0});
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(x[1] == doctest::Approx(1.5).epsilon(1e-10));

  // g2 is 0/0 on c1 = 0; the solved forms define the same point.
  const StatePoint z = psi_solve(s, {0.0, 0.0}, xi, {1.5, 1.4});
  CHECK(z[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // Round trip over random levels and parameters against the closed form.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c1d(-1, 1), c2d(0, 1), u(0.9, 1.1), v(1.8, 2.2);
  int solved = 0;
  double worst = 0.0, worst_x = 0.0;
  for (int k = 0; k < 100; ++k) {
    const testing::Xi p{u(rng), v(rng), u(rng), u(rng)};
    const LevelVec c{c1d(rng), c2d(rng)};
    if (std::abs(c[0]) < 1e-3) continue;
    double ex1, ex2;
    testing::closed_form(0.0, c[0], c[1], p, ex1, ex2);
    const StatePoint r = psi_solve(s, c, {p.x1, p.x2, p.x3, p.x4}, {ex1 + 0.05, ex2 - 0.05});
    const LevelVec back = c_from_x0(s, r, {p.x1, p.x2, p.x3, p.x4});
    worst = std::max({worst, std::abs(back[0] - c[0]), std::abs(back[1] - c[1])});
    worst_x = std::max({worst_x, std::abs(r[0] - ex1), std::abs(r[1] - ex2)});
    ++solved;
  }
  CHECK(solved >= 95);
  CHECK(worst < 1e-9);
  CHECK(worst_x < 1e-9);
}

TEST_CASE("leaf distance") {
  const SystemDef s = bundled_example();
  CHECK(leaf_distance(s, 0, 0.7, 0.2, DistanceMode::Constant) == doctest::Approx(0.5));
  CHECK(leaf_distance(s, 0, 0.3, 0.3, DistanceMode::Constant) == 0.0);
  const double inf = leaf_distance(s, 0, 0.7, 0.2, DistanceMode::Infimum, {1, 2, 1, 1});
  CHECK(inf == doctest::Approx(0.5).epsilon(1e-9));
  SystemDef no_form = s;
  no_form.solved_forms[0].reset();
  CHECK_THROWS(leaf_distance(no_form, 0, 0.7, 0.2, DistanceMode::Infimum, {1, 2, 1, 1}));
}

TEST_CASE("parameter boxes") {
  const SystemDef s = bundled_example();
  CHECK(s.param_box.grid(3).size() == 81);
  CHECK(s.level_box.vertices_and_center().size() == 5);
  const ParamBox wide = s.param_box.scaled(2.0);
  CHECK(wide.ranges[0].lo == doctest::Approx(0.8));
  CHECK(wide.ranges[0].hi == doctest::Approx(1.2));
  CHECK(s.param_box.contains(std::vector<double>{1, 2, 1, 1}));
  CHECK_FALSE(s.param_box.contains(std::vector<double>{0, 2, 1, 1}));
}
