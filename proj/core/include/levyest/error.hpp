#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace levyest {

// Base of every error thrown by the library. Callers that only care about
// "did the estimator give up" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(std::size_t step, const std::string& what)
      : Error("simulation diverged at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class SingularFit : public Error {
 public:
  using Error::Error;
};

class SparseWindow : public Error {
 public:
  SparseWindow(double where, const std::string& what)
      : Error("sparse window at t=" + std::to_string(where) + ": " + what), where_(where) {}
  double where() const noexcept { return where_; }

 private:
  double where_;
};

class EstimationFailed : public Error {
 public:
  using Error::Error;
};

class NoIdentifiableRegion : public Error {
 public:
  using Error::Error;
};

}  // namespace levyest
