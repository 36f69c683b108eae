#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arttrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside its mathematical domain (e.g. a
/// probability of exactly 0 or 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inputs reference nodes, frames or parts inconsistently.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Hard constraints admit no feasible solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The instance exceeds a solver limit.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration key, value or flag combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace arttrack
