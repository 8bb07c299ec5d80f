#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace invlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model evaluator produced a non-finite value or was called out of domain.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Integrated state exceeded the blow-up threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Configuration problem; message starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace invlab
