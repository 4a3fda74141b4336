#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nearex {

// Invalid distribution / model parameters (sigma <= 0, q <= 1, lo >= hi, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of an operation (p outside [0,1], N < 2, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A limit family that does not match the parent's domain of attraction.
class ClassificationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Quadrature or root finding did not reach the requested tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  [[nodiscard]] double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

// Malformed input data. `line` is 1-based, 0 when not applicable.
class DataError : public std::runtime_error {
 public:
  DataError(std::string source, std::size_t line, const std::string& message)
      : std::runtime_error(format(source, line, message)),
        source_(std::move(source)),
        line_(line) {}

  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& message) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + message;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace nearex
