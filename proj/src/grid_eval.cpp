#include "grid_eval.hpp"

#include "lyacanon/parallel.hpp"
#include "lyacanon/program.hpp"

namespace lyacanon::detail {

std::vector<std::vector<double>> eval_on_grid(std::span<const Expr> roots,
                                              std::span<const Expr> guards,
                                              const std::vector<std::string>& slots,
                                              const SampleGrid& grid) {
  std::vector<Expr> all(roots.begin(), roots.end());
  all.insert(all.end(), guards.begin(), guards.end());
  Program prog(all, slots);
  const auto map = grid.slot_map(slots);
  std::vector<std::vector<double>> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t p) {
    std::vector<double> in(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) in[k] = grid.points[p][map[k]];
    std::vector<double> out(all.size());
    if (!prog.try_eval(in, out)) return;
    for (std::size_t k = roots.size(); k < out.size(); ++k) {
      if (!(out[k] > 0)) return;
    }
    out.resize(roots.size());
    rows[p] = std::move(out);
  });
  return rows;
}

}  // namespace lyacanon::detail
