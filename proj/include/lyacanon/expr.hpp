#pragma once

// Immutable symbolic expression trees.
//
// Nodes are reference counted and never mutated after construction, so an
// Expr is a cheap value type that can be shared freely between threads.
// Transformations (substitute, diff, simplify) preserve sharing of untouched
// subtrees, which keeps cascaded substitutions compact.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyacanon/errors.hpp"

namespace lyacanon {

enum class Op : std::uint8_t { Constant, Var, Neg, Add, Sub, Mul, Div, Pow, Fn };
enum class Func : std::uint8_t { Sin, Cos, Exp, Sqrt, Ln };

std::string_view func_name(Func f);
std::optional<Func> func_from_name(std::string_view name);

/// True if `name` matches `[A-Za-z][A-Za-z0-9_]*` and is not a function name.
bool is_identifier(std::string_view name);

class Expr {
 public:
  /// Constant zero.
  Expr();

  static Expr constant(double value);
  static Expr var(std::string name);
  static Expr neg(Expr operand);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr call(Func f, Expr operand);

  Op op() const noexcept;
  double value() const;             // Constant only
  const std::string& name() const;  // Var only
  Func func() const;                // Fn only

  /// Number of child expressions (0, 1 or 2).
  std::size_t arity() const noexcept;
  const Expr& child(std::size_t i) const;
  const Expr& lhs() const { return child(0); }
  const Expr& rhs() const { return child(1); }

  bool is_constant() const noexcept { return op() == Op::Constant; }
  bool is_constant(double v) const noexcept;
  bool is_var(std::string_view name) const noexcept;

  /// Node identity; equal ids imply structural equality.
  const void* id() const noexcept { return node_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  static const std::shared_ptr<const Node>& zero_node();
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Raw node builders; no simplification is applied.
Expr operator-(Expr a);
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr pow(Expr base, Expr exponent);
Expr call(Func f, Expr arg);

/// Parses the expression grammar:
///   identifiers `[A-Za-z][A-Za-z0-9_]*`, decimal literals with optional
///   fraction and exponent, `+ - * / ^` where `^` binds tighter than unary
///   minus, which binds tighter than `* /`, then binary `+ -`; `^` is
///   right-associative; calls `name(expr)` for sin, cos, exp, sqrt, ln.
/// A unary minus applied directly to a literal that is not a power base
/// folds into a negative constant.
Expr parse(std::string_view text);

/// Prints with minimal parentheses; parse(to_string(e)) == e.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

using Binding = std::map<std::string, double, std::less<>>;

/// Evaluates in IEEE double precision. Throws UnboundVariable or DomainError.
double eval(const Expr& e, const Binding& b);

/// Exact symbolic partial derivative, simplified.
Expr diff(const Expr& e, std::string_view var);

/// n-th partial derivative with respect to `var`.
Expr diff_n(const Expr& e, std::string_view var, unsigned order);

/// Total derivative along the flow ds_i/dt = rhs_i:
/// de/dt + sum_i de/ds_i * rhs_i, simplified.
Expr lie_derivative(const Expr& e, std::span<const Expr> rhs,
                    std::span<const std::string> states, std::string_view time_var);

using Substitution = std::map<std::string, Expr, std::less<>>;

/// Simultaneous substitution; replacements are not re-scanned.
Expr substitute(const Expr& e, const Substitution& subst);

struct SimplifyOptions {
  /// Enables a/a -> 1. Division guards make a == 0 an evaluation error anyway.
  bool assume_nonzero = true;
};

/// Conservative rewriting: constant folding, 0/1 identities, a-a -> 0,
/// a/a -> 1, double negation and sign normalisation. No trigonometric or
/// exponential identities are applied (exp(t)*exp(-t) stays as is).
Expr simplify(const Expr& e, const SimplifyOptions& options = {});

std::set<std::string> free_variables(const Expr& e);
bool contains_var(const Expr& e, std::string_view var);

/// Number of nodes counting shared subtrees once.
std::size_t dag_size(const Expr& e);

}  // namespace lyacanon
