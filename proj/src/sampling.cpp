#include "lyacanon/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lyacanon/parallel.hpp"
#include "lyacanon/program.hpp"

namespace lyacanon {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {0.5 * (lo + hi)};
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.back() = hi;
  return out;
}

std::vector<double> interior_points(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 1; i <= count; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count + 1));
  }
  return out;
}

std::optional<std::size_t> SampleGrid::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

Binding SampleGrid::binding(std::size_t i) const {
  Binding b;
  for (std::size_t j = 0; j < names.size(); ++j) b[names[j]] = points.at(i).at(j);
  return b;
}

SampleGrid SampleGrid::cartesian(
    const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
  SampleGrid g;
  std::size_t total = 1;
  for (const auto& [name, values] : axes) {
    g.names.push_back(name);
    total *= values.size();
  }
  if (axes.empty()) total = 0;
  g.points.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<double> p(axes.size());
    for (std::size_t j = 0; j < axes.size(); ++j) p[j] = axes[j].second[idx[j]];
    g.points.push_back(std::move(p));
    for (std::size_t j = axes.size(); j-- > 0;) {
      if (++idx[j] < axes[j].second.size()) break;
      idx[j] = 0;
    }
  }
  return g;
}

SampleGrid SampleGrid::product(const SampleGrid& a, const SampleGrid& b) {
  SampleGrid g;
  g.names = a.names;
  g.names.insert(g.names.end(), b.names.begin(), b.names.end());
  for (const auto& p : a.points) {
    for (const auto& q : b.points) {
      std::vector<double> r = p;
      r.insert(r.end(), q.begin(), q.end());
      g.points.push_back(std::move(r));
    }
  }
  return g;
}

SampleGrid SampleGrid::uniform(const std::vector<std::pair<std::string, Interval>>& box,
                               std::size_t count, std::uint64_t seed) {
  SampleGrid g;
  for (const auto& [name, iv] : box) g.names.push_back(name);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  g.points.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> p;
    p.reserve(box.size());
    for (const auto& [name, iv] : box) p.push_back(iv.lo + (iv.hi - iv.lo) * unit(rng));
    g.points.push_back(std::move(p));
  }
  return g;
}

SampleGrid SampleGrid::with_fixed(std::string_view name, double value) const {
  SampleGrid g = *this;
  auto idx = index_of(name);
  if (!idx) {
    g.names.emplace_back(name);
    for (auto& p : g.points) p.push_back(value);
  } else {
    for (auto& p : g.points) p[*idx] = value;
  }
  return g;
}

std::vector<std::size_t> SampleGrid::slot_map(std::span<const std::string> slots) const {
  std::vector<std::size_t> out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    auto idx = index_of(s);
    if (!idx) throw UnboundVariable(s);
    out.push_back(*idx);
  }
  return out;
}

SampleGrid default_grid(std::span<const Expr> exprs, std::size_t count, std::uint64_t seed) {
  std::set<std::string> vars;
  for (const auto& e : exprs) {
    auto fv = free_variables(e);
    vars.insert(fv.begin(), fv.end());
  }
  std::vector<std::pair<std::string, Interval>> box;
  for (const auto& v : vars) box.emplace_back(v, Interval{0.25, 2.0});
  if (box.empty()) {
    SampleGrid g;
    g.points.assign(count, {});
    return g;
  }
  return SampleGrid::uniform(box, count, seed);
}

EquivalenceResult equiv_sample(const Expr& a, const Expr& b, const SampleGrid& grid, double tol) {
  std::vector<std::string> slots(grid.names);
  Expr roots[] = {a, b};
  Program prog(roots, slots);

  const std::size_t n = grid.size();
  std::vector<double> diffs(n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, [&](std::size_t i) {
    double out[2];
    if (prog.try_eval(grid.points[i], out)) diffs[i] = std::abs(out[0] - out[1]);
  });

  EquivalenceResult r;
  std::optional<std::size_t> worst;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(diffs[i])) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    if (!worst || diffs[i] > r.max_abs_diff) {
      r.max_abs_diff = diffs[i];
      worst = i;
    }
  }
  if (r.evaluated == 0) {
    throw DomainError("equiv_sample: every grid point is outside the expression domain");
  }
  r.equivalent = r.max_abs_diff <= tol;
  if (!r.equivalent) r.witness = grid.binding(*worst);
  return r;
}

bool is_numerically_zero(const Expr& e, const SampleGrid& grid, double tol) {
  return equiv_sample(e, Expr::constant(0), grid, tol).equivalent;
}

}  // namespace lyacanon
