#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace betaconst {

// Invalid parameterization of a config struct (SimConfig, TestConfig, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Data handed to an operation violates its preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data is well-formed but carries no information for the requested estimate
// (zero variation, constant prices, every block guarded out).
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : InputError("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace betaconst
