#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bloom {

/// Raised when a kernel is evaluated outside its domain (negative depth,
/// quota outside [Q_m, Q_M], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for invalid parameter records or configuration files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time integration or nonlinear solve failure. Carries the last accepted
/// time and state so callers can report where the run broke down.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double t, Eigen::VectorXd state)
      : std::runtime_error(what), t_(t), state_(std::move(state)) {}

  double time() const { return t_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  double t_;
  Eigen::VectorXd state_;
};

}  // namespace bloom
