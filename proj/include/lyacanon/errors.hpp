#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lyacanon {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(const std::string& name)
      : Error("unbound variable '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Raised when an operation leaves its mathematical domain
/// (sqrt of a negative, ln of a non-positive, near-zero division, overflow).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_residual)
      : Error(message), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class UnsolvableComponent : public Error {
 public:
  UnsolvableComponent(std::size_t k, const std::string& why)
      : Error("unsolvable component " + std::to_string(k) + ": " + why), k_(k) {}
  std::size_t component() const noexcept { return k_; }

 private:
  std::size_t k_;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyacanon
