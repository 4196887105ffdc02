#pragma once

#include <stdexcept>
#include <string>

namespace graphgp {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument: dimension mismatch, out-of-range index, bad enum combination.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Input matrix violates a required symmetry.
class SymmetryError : public ParameterError {
public:
  using ParameterError::ParameterError;
};

/// A spectral regularizer hit a pole (e.g. p-step random walk with alpha <= 2).
class SingularityError : public Error {
public:
  using Error::Error;
};

/// A linear solve or factorization failed even after jitter escalation.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate(condition_estimate) {}
  double condition_estimate = 0.0;
};

/// An internal postcondition that should be unreachable was violated.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

/// Malformed on-disk data. Carries the offending file and 1-based line (0 = whole file).
class ParseError : public Error {
public:
  ParseError(const std::string& file, long line, const std::string& what)
      : Error(line > 0 ? file + ":" + std::to_string(line) + ": " + what
                       : file + ": " + what),
        file(file), line(line) {}
  std::string file;
  long line = 0;
};

/// Synthetic data generation could not satisfy its contract (e.g. connectivity).
class GenerationError : public Error {
public:
  using Error::Error;
};

/// Hyperparameter optimization failed on every restart.
class OptimizationError : public Error {
public:
  using Error::Error;
};

/// Experiment configuration is invalid or inconsistent.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace graphgp
