#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embedcast {

// Index or size outside the admissible range (split points, lags, windows).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Caller broke a precondition on shapes or dimensions.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a transform (e.g. ln(1+x), x <= -1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A simulation or training run left the finite/bounded regime.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Mutual-information profile had neither a local minimum nor a plateau.
class SelectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace embedcast
