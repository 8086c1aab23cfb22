#pragma once

#include <stdexcept>
#include <string>

namespace cpr {

/// Process exit codes shared by the library errors and the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kInvalidArgument = 2,
  kInfeasible = 3,
  kNumericalFailure = 4,
};

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(what, ExitCode::kInvalidArgument) {}
};

class DimensionMismatch : public InvalidArgument {
 public:
  explicit DimensionMismatch(const std::string& what)
      : InvalidArgument("dimension mismatch: " + what) {}
};

/// Configuration is well formed but cannot be carried out
/// (e.g. more golfing groups than measurements, enumeration budget exceeded).
class Infeasible : public Error {
 public:
  explicit Infeasible(const std::string& what)
      : Error(what, ExitCode::kInfeasible) {}
};

/// Iterative kernel failed; `residual` is the last measured residual.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual = 0.0)
      : Error(what, ExitCode::kNumericalFailure), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace cpr
