#pragma once

#include <stdexcept>
#include <string>

namespace symlab {

/// Malformed input shapes: mismatched dimensions, group orders or tables.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidProjectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidMeasureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an SGD update produces a non-finite or exploding parameter.
class DivergedRunError : public std::runtime_error {
 public:
  DivergedRunError(long long epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  long long epoch() const noexcept { return epoch_; }

 private:
  long long epoch_;
};

/// The heuristic saw an escape but the mean residual cancelled out.
class DegenerateEscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace symlab
