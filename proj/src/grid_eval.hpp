#pragma once

#include <span>
#include <string>
#include <vector>

#include "lyacanon/expr.hpp"
#include "lyacanon/sampling.hpp"

namespace lyacanon::detail {

/// Evaluates `roots` at every grid point. A point whose evaluation fails or
/// where any guard is not positive yields an empty row.
std::vector<std::vector<double>> eval_on_grid(std::span<const Expr> roots,
                                              std::span<const Expr> guards,
                                              const std::vector<std::string>& slots,
                                              const SampleGrid& grid);

}  // namespace lyacanon::detail
