#pragma once

#include <random>

#include "lyacanon/expr.hpp"

namespace testing {

/// Expressions over u, v, w that stay finite for |u|, |v|, |w| <= 2.
inline lyacanon::Expr random_expr(std::mt19937_64& rng, int depth) {
  using lyacanon::Expr;
  using lyacanon::Func;
  std::uniform_int_distribution<int> leaf(0, 3);
  std::uniform_int_distribution<int> node(0, 8);
  if (depth == 0) {
    switch (leaf(rng)) {
      case 0: return Expr::var("u");
      case 1: return Expr::var("v");
      case 2: return Expr::var("w");
      default: return Expr::constant(std::uniform_real_distribution<double>(-3, 3)(rng));
    }
  }
  Expr a = random_expr(rng, depth - 1);
  Expr b = random_expr(rng, depth - 1);
  switch (node(rng)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    case 3: return a / (Expr::constant(2) + b * b);
    case 4: return lyacanon::call(Func::Sin, a);
    case 5: return lyacanon::call(Func::Cos, a) * b;
    case 6: return lyacanon::call(Func::Exp, lyacanon::call(Func::Sin, a));
    case 7: return lyacanon::call(Func::Sqrt, Expr::constant(1) + a * a);
    default: return lyacanon::pow(a, Expr::constant(2)) - b;
  }
}

inline lyacanon::Binding random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2, 2);
  return {{"u", d(rng)}, {"v", d(rng)}, {"w", d(rng)}};
}

}  // namespace testing
