#pragma once

// Flat register programs compiled from Expr DAGs for fast repeated evaluation.

#include <span>
#include <string>
#include <vector>

#include "lyacanon/expr.hpp"

namespace lyacanon {

/// Absolute threshold below which a denominator counts as zero.
inline constexpr double kDomainEpsilon = 1e-12;

class Program {
 public:
  Program() = default;

  /// Compiles `roots` against positional input slots. Every free variable
  /// must appear in `slots`, otherwise UnboundVariable is thrown. Shared
  /// subtrees (by node identity) are evaluated once.
  Program(std::span<const Expr> roots, std::vector<std::string> slots);
  Program(const Expr& root, std::vector<std::string> slots);

  /// Evaluates all roots. `in` follows slot order, `out` has one entry per
  /// root. Throws DomainError naming the failing subexpression and point.
  void eval(std::span<const double> in, std::span<double> out) const;

  /// Convenience for single-root programs (or the first root).
  double operator()(std::span<const double> in) const;

  /// As eval() but returns false instead of throwing on domain errors.
  bool try_eval(std::span<const double> in, std::span<double> out) const noexcept;

  const std::vector<std::string>& slots() const noexcept { return slots_; }
  std::size_t outputs() const noexcept { return roots_.size(); }
  std::size_t size() const noexcept { return code_.size(); }

 private:
  struct Instr {
    Op op;
    Func fn;
    int a = -1;
    int b = -1;
    double k = 0.0;  // constant value or input slot index
  };
  enum class Status { Ok, Domain };

  Status run(std::span<const double> in, std::vector<double>& regs, int& failed) const noexcept;
  [[noreturn]] void raise(std::span<const double> in, int failed) const;

  std::vector<std::string> slots_;
  std::vector<Instr> code_;
  std::vector<Expr> source_;  // per instruction, for diagnostics
  std::vector<int> roots_;
};

}  // namespace lyacanon
