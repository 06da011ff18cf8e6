#pragma once

#include <stdexcept>
#include <string>

namespace infersim {

// Bad input: malformed files, out-of-range parameters, inconsistent config.
// Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, int line)
      : ValidationError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// No configuration satisfies the requested constraint. Carries the best value
// that was achievable so callers can report it.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double best_achievable)
      : std::runtime_error(what), best_achievable_(best_achievable) {}
  double best_achievable() const { return best_achievable_; }

 private:
  double best_achievable_;
};

// Reports that cannot be compared (different traces, missing baseline).
class ComparisonError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace infersim
