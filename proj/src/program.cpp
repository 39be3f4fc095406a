#include "lyacanon/program.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

namespace lyacanon {

Program::Program(const Expr& root, std::vector<std::string> slots)
    : Program(std::span<const Expr>(&root, 1), std::move(slots)) {}

Program::Program(std::span<const Expr> roots, std::vector<std::string> slots)
    : slots_(std::move(slots)) {
  std::unordered_map<std::string_view, int> slot_index;
  for (std::size_t i = 0; i < slots_.size(); ++i) slot_index.emplace(slots_[i], static_cast<int>(i));

  std::unordered_map<const void*, int> reg_of;
  // Post-order emission with an explicit stack keeps deep trees off the
  // call stack.
  auto emit = [&](const Expr& root) -> int {
    struct Frame {
      const Expr* e;
      bool expanded;
    };
    std::vector<Frame> stack{{&root, false}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      if (reg_of.count(f.e->id())) continue;
      if (!f.expanded && f.e->arity() > 0) {
        stack.push_back({f.e, true});
        for (std::size_t i = f.e->arity(); i-- > 0;) stack.push_back({&f.e->child(i), false});
        continue;
      }
      Instr in{f.e->op(), Func::Sin};
      switch (f.e->op()) {
        case Op::Constant: in.k = f.e->value(); break;
        case Op::Var: {
          auto it = slot_index.find(f.e->name());
          if (it == slot_index.end()) throw UnboundVariable(f.e->name());
          in.k = it->second;
          break;
        }
        case Op::Fn:
          in.fn = f.e->func();
          in.a = reg_of.at(f.e->child(0).id());
          break;
        case Op::Neg: in.a = reg_of.at(f.e->child(0).id()); break;
        default:
          in.a = reg_of.at(f.e->lhs().id());
          in.b = reg_of.at(f.e->rhs().id());
          break;
      }
      reg_of.emplace(f.e->id(), static_cast<int>(code_.size()));
      code_.push_back(in);
      source_.push_back(*f.e);
    }
    return reg_of.at(root.id());
  };
  for (const Expr& r : roots) roots_.push_back(emit(r));
}

Program::Status Program::run(std::span<const double> in, std::vector<double>& regs,
                             int& failed) const noexcept {
  regs.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& c = code_[i];
    double r = 0.0;
    switch (c.op) {
      case Op::Constant: r = c.k; break;
      case Op::Var: r = in[static_cast<std::size_t>(c.k)]; break;
      case Op::Neg: r = -regs[c.a]; break;
      case Op::Add: r = regs[c.a] + regs[c.b]; break;
      case Op::Sub: r = regs[c.a] - regs[c.b]; break;
      case Op::Mul: r = regs[c.a] * regs[c.b]; break;
      case Op::Div: {
        double den = regs[c.b];
        if (std::abs(den) <= kDomainEpsilon) {
          failed = static_cast<int>(i);
          return Status::Domain;
        }
        r = regs[c.a] / den;
        break;
      }
      case Op::Pow: {
        double base = regs[c.a];
        double ex = regs[c.b];
        if ((base < 0 && ex != std::floor(ex)) || (base == 0 && ex < 0)) {
          failed = static_cast<int>(i);
          return Status::Domain;
        }
        r = ex == 2.0 ? base * base : std::pow(base, ex);
        break;
      }
      case Op::Fn: {
        double x = regs[c.a];
        switch (c.fn) {
          case Func::Sin: r = std::sin(x); break;
          case Func::Cos: r = std::cos(x); break;
          case Func::Exp: r = std::exp(x); break;
          case Func::Sqrt:
            if (x < 0) {
              failed = static_cast<int>(i);
              return Status::Domain;
            }
            r = std::sqrt(x);
            break;
          case Func::Ln:
            if (x <= 0) {
              failed = static_cast<int>(i);
              return Status::Domain;
            }
            r = std::log(x);
            break;
        }
        break;
      }
    }
    if (!std::isfinite(r)) {
      failed = static_cast<int>(i);
      return Status::Domain;
    }
    regs[i] = r;
  }
  return Status::Ok;
}

void Program::raise(std::span<const double> in, int failed) const {
  std::ostringstream os;
  os << "domain violation in '" << source_[static_cast<std::size_t>(failed)] << "' at {";
  for (std::size_t i = 0; i < slots_.size() && i < in.size(); ++i) {
    if (i) os << ", ";
    os << slots_[i] << "=" << in[i];
  }
  os << "}";
  throw DomainError(os.str());
}

void Program::eval(std::span<const double> in, std::span<double> out) const {
  if (in.size() < slots_.size()) throw DimensionError("Program::eval: too few inputs");
  if (out.size() < roots_.size()) throw DimensionError("Program::eval: output span too small");
  thread_local std::vector<double> regs;
  int failed = -1;
  if (run(in, regs, failed) != Status::Ok) raise(in, failed);
  for (std::size_t i = 0; i < roots_.size(); ++i) out[i] = regs[roots_[i]];
}

double Program::operator()(std::span<const double> in) const {
  if (roots_.empty()) throw Error("Program: no outputs");
  double out = 0.0;
  if (roots_.size() == 1) {
    eval(in, std::span<double>(&out, 1));
    return out;
  }
  std::vector<double> all(roots_.size());
  eval(in, all);
  return all[0];
}

bool Program::try_eval(std::span<const double> in, std::span<double> out) const noexcept {
  if (in.size() < slots_.size() || out.size() < roots_.size()) return false;
  thread_local std::vector<double> regs;
  int failed = -1;
  if (run(in, regs, failed) != Status::Ok) return false;
  for (std::size_t i = 0; i < roots_.size(); ++i) out[i] = regs[roots_[i]];
  return true;
}

}  // namespace lyacanon
