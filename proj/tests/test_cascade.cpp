#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace lyacanon;

namespace {

Binding point(double t, double y1, double y2, double c1, double c2, const testing::Xi& p) {
  return {{"t", t},   {"y1", y1},  {"y2", y2},  {"c1", c1},
          {"c2", c2}, {"xi1", p.x1}, {"xi2", p.x2}, {"xi3", p.x3}, {"xi4", p.x4}};
}

template <class F>
void for_samples(std::uint64_t seed, int count, F&& f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t(0, 12), y(-0.3, 0.3), c1(-1, 1), c2(0, 1),
      u(0.9, 1.1), v(1.8, 2.2);
  for (int k = 0; k < count; ++k) {
    const testing::Xi p{u(rng), v(rng), u(rng), u(rng)};
    f(t(rng), y(rng), y(rng), c1(rng), c2(rng), p);
  }
}

}  // namespace

TEST_CASE("two stages reproduce the paper's substitutions") {
  const CanonicalSystem& cs = testing::example_canonical();
  REQUIRE(cs.stages.size() == 2);
  CHECK(cs.stages[0].component == 0);
  CHECK(cs.stages[1].component == 1);
  CHECK(cs.stages[0].source == SolveSource::UserForm);
  CHECK(cs.stages[0].residual_check.ok);
  CHECK(cs.stages[1].residual_check.ok);

  double worst1 = 0.0, worst2 = 0.0;
  for_samples(1, 400, [&](double t, double y1, double, double c1, double c2, const testing::Xi& p) {
    // Stage 1: x1 = y1 + x2 + c1/eta with x2 free.
    const double x2 = 1.3;
    Binding b = point(t, y1, 0, c1, c2, p);
    b["x2"] = x2;
    worst1 = std::max(worst1, std::abs(eval(cs.stages[0].phi, b) - (x2 + c1 / testing::eta(t, p))));
    // Stage 2: x2 = y2 + sqrt(gamma + c2 (y1 + c1/eta)).
    worst2 = std::max(worst2, std::abs(eval(cs.stages[1].phi, b) - testing::stage_root(t, y1, c1, c2, p)));
  });
  CHECK(worst1 < 1e-12);
  CHECK(worst2 < 1e-12);
}

TEST_CASE("forward and inverse maps") {
  const CanonicalSystem& cs = testing::example_canonical();
  double worst = 0.0, worst_inv = 0.0;
  for_samples(2, 400, [&](double t, double y1, double y2, double c1, double c2, const testing::Xi& p) {
    double x1, x2;
    testing::forward(t, y1, y2, c1, c2, p, x1, x2);
    const Binding b = point(t, y1, y2, c1, c2, p);
    worst = std::max({worst, std::abs(eval(cs.forward_map[0], b) - x1),
                      std::abs(eval(cs.forward_map[1], b) - x2)});
    Binding bx = b;
    bx.erase("y1");
    bx.erase("y2");
    bx["x1"] = x1;
    bx["x2"] = x2;
    worst_inv = std::max({worst_inv, std::abs(eval(cs.inverse_map[0], bx) - y1),
                          std::abs(eval(cs.inverse_map[1], bx) - y2)});
  });
  CHECK(worst < 1e-12);
  CHECK(worst_inv < 1e-10);
}

TEST_CASE("canonical right-hand side matches the chain-rule oracle") {
  const CanonicalSystem& cs = testing::example_canonical();
  double worst1 = 0.0, worst2 = 0.0, worst_lin = 0.0;
  for_samples(3, 400, [&](double t, double y1, double y2, double c1, double c2, const testing::Xi& p) {
    double f1, f2;
    testing::canonical_rhs(t, y1, y2, c1, c2, p, f1, f2);
    const Binding b = point(t, y1, y2, c1, c2, p);
    const double a1 = eval(cs.rhs_canon[0], b);
    const double a2 = eval(cs.rhs_canon[1], b);
    worst1 = std::max(worst1, std::abs(a1 - f1) / (1 + std::abs(f1)));
    worst2 = std::max(worst2, std::abs(a2 - f2) / (1 + std::abs(f2)));
    worst_lin = std::max(worst_lin, std::abs(a1 + p.x1 * y1));
  });
  CHECK(worst1 < 1e-9);
  CHECK(worst2 < 1e-9);
  // f1 = -(deta/dt)/eta * y1 = -xi1 y1.
  CHECK(worst_lin < 1e-9);
}

TEST_CASE("flatness, round trip and convergence evidence") {
  const CanonicalSystem& cs = testing::example_canonical();
  CanonicalGridSpec spec;
  spec.c_points = {{0, 0}, {0.5, 0.5}, {-0.5, 0.5}};
  const SampleGrid grid = canonical_grid(cs, spec);
  const auto flat = verify_flatness(cs, grid);
  REQUIRE(flat.size() == 2);
  for (const auto& f : flat) {
    CHECK(f.ok);
    CHECK(f.max_abs < 1e-9);
    CHECK(f.evaluated > 0);
  }
  const RoundTripResult rt = verify_round_trip(cs, grid);
  CHECK(rt.ok);
  CHECK(rt.max_abs < 1e-8);

  ConvergenceOptions co;
  co.c_points = spec.c_points;
  co.xi_points = {{1, 2, 1, 1}};
  const ConvergenceReport conv = check_uniform_convergence(cs, co);
  CHECK(conv.monotone);
  CHECK(conv.verdict);
  CHECK(conv.radii.size() == conv.sup_gap.size());
  for (std::size_t k = 1; k < conv.sup_gap.size(); ++k) CHECK(conv.sup_gap[k] >= conv.sup_gap[k - 1]);
}

TEST_CASE("point maps") {
  const CanonicalSystem& cs = testing::example_canonical();
  const ParamPoint xi{1, 2, 1, 1};
  const StatePoint x = decanonize_point(cs, 0.0, {0, 0}, {0.5, 0.5}, xi);
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(1.5).epsilon(1e-14));
  const StatePoint y = canonize_point(cs, 0.0, {2.1, 1.4}, {0.5, 0.5}, xi);
  const StatePoint x2 = decanonize_point(cs, 0.0, y, {0.5, 0.5}, xi);
  CHECK(x2[0] == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(x2[1] == doctest::Approx(1.4).epsilon(1e-12));
  CHECK_THROWS_AS(decanonize_point(cs, 0.0, {0, -5}, {0.5, 0.5}, xi), DomainError);
}

TEST_CASE("construction is deterministic") {
  const CanonicalSystem a = build_canonical(bundled_example());
  const CanonicalSystem b = build_canonical(bundled_example());
  for (std::size_t i = 0; i < a.n; ++i) {
    CHECK(to_string(a.rhs_canon[i]) == to_string(b.rhs_canon[i]));
    CHECK(to_string(a.forward_map[i]) == to_string(b.forward_map[i]));
  }
}

TEST_CASE("stage order can be permuted and is validated") {
  CascadeOptions bad;
  bad.order = {0, 0};
  CHECK_THROWS(build_canonical(bundled_example(), bad));
}

TEST_CASE("stage-by-stage application") {
  const SystemDef s = bundled_example();
  CascadeState st = initial_cascade_state(s);
  CHECK(st.completed == 0);
  const CascadeStage first = derive_stage(s, st, 0);
  st = apply_stage(first, st);
  CHECK(st.completed == 1);
  CHECK(st.flattened[0]);
  CHECK_FALSE(st.flattened[1]);
  CHECK(st.coords == std::vector<std::string>{"y1", "x2"});
}

TEST_CASE("one-dimensional systems") {
  const CanonicalSystem trivial = build_canonical(load_system(testing::data_file("trivial.lyc")));
  REQUIRE(trivial.stages.size() == 1);
  CHECK(trivial.stages[0].source == SolveSource::AutoLinear);
  CHECK(is_numerically_zero(trivial.rhs_canon[0], default_grid(std::vector<Expr>{trivial.rhs_canon[0]})));

  const CanonicalSystem decay = build_canonical(load_system(testing::data_file("decay.lyc")));
  const SampleGrid g = default_grid(std::vector<Expr>{decay.rhs_canon[0]});
  CHECK(equiv_sample(decay.rhs_canon[0], parse("-xi1*y1"), g, 1e-9).equivalent);

  CHECK_THROWS_AS(build_canonical(load_system(testing::data_file("unsolvable.lyc"))),
                  UnsolvableComponent);
}
