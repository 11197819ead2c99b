#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>

namespace p2lab {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_argument,
  parse,
  io,
  config,
  invalid_mesh,
  invalid_weight,
  weights_condition,
  constants_inside_subspace,
  degenerate_direction,
  degenerate_problem,
  invalid_discretization,
  asymmetric_matrix,
  not_in_cone,
  constant_direction,
  below_threshold,
  nonconvergence,
  property_failure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::io: return "io-error";
    case ErrorKind::config: return "config-error";
    case ErrorKind::invalid_mesh: return "invalid-mesh";
    case ErrorKind::invalid_weight: return "invalid-weight";
    case ErrorKind::weights_condition: return "weights-condition-violated";
    case ErrorKind::constants_inside_subspace: return "constants-inside-subspace";
    case ErrorKind::degenerate_direction: return "degenerate-direction";
    case ErrorKind::degenerate_problem: return "degenerate-problem";
    case ErrorKind::invalid_discretization: return "invalid-discretization";
    case ErrorKind::asymmetric_matrix: return "asymmetric-matrix";
    case ErrorKind::not_in_cone: return "not-in-cone";
    case ErrorKind::constant_direction: return "constant-direction";
    case ErrorKind::below_threshold: return "below-threshold";
    case ErrorKind::nonconvergence: return "nonconvergence";
    case ErrorKind::property_failure: return "property-failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when a solver hits its iteration cap; keeps the last iterate.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& message, Eigen::VectorXd last_iterate,
                      double last_residual, int iterations)
      : Error(ErrorKind::nonconvergence, message),
        last_iterate_(std::move(last_iterate)),
        last_residual_(last_residual),
        iterations_(iterations) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd last_iterate_;
  double last_residual_;
  int iterations_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace p2lab
