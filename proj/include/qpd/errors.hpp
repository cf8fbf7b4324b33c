#pragma once

#include <stdexcept>
#include <string>

namespace qpd {

/// Input outside the mathematical domain of an operation (non-positive
/// frequency, unnormalized state, invalid probability vector, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed model description: bad level scheme, topology, coupling keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation exists only for the named Xi / Lambda / V
/// configurations.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigensolver or cutoff iteration failed to converge.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Broken internal invariant, e.g. an RWA term leaving its sector.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Energy derivative requested at a degenerate (first-order) point.
class DerivativeUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qpd
