#pragma once

#include <stdexcept>
#include <string>

namespace markov_qre {

/// Base class for every error raised by the library. `kind()` is the
/// machine-readable tag the CLI prints in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// The two-player chain has no unique stationary state:
/// (alpha1 - gamma1) * (alpha2 - gamma2) is within the threshold of 1.
class DegenerateChain : public Error {
 public:
  explicit DegenerateChain(const std::string& message)
      : Error("DegenerateChain", message) {}
};

class NoSolution : public Error {
 public:
  explicit NoSolution(const std::string& message) : Error("NoSolution", message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row, std::size_t column)
      : Error("ParseError", message + " (row " + std::to_string(row) + ", column " +
                                std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class InsufficientSweep : public Error {
 public:
  explicit InsufficientSweep(const std::string& message)
      : Error("InsufficientSweep", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace markov_qre
