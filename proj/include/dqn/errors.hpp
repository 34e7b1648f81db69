#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dqn {

/// A caller broke a documented precondition (bad dimensions, asymmetric input, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A property the algorithms guarantee did not hold. Always a bug, never a regime.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : std::runtime_error("matrix is not positive definite: pivot " +
                           std::to_string(pivot) + " is " + std::to_string(value)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Invalid user input: config files, CLI flags, dataset files, graph parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A node state picked up a NaN or Inf.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::size_t node, std::size_t iteration)
      : std::runtime_error("diverged: non-finite state at node " + std::to_string(node) +
                           ", iteration " + std::to_string(iteration)),
        node_(node),
        iteration_(iteration) {}

  std::size_t node() const noexcept { return node_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t node_;
  std::size_t iteration_;
};

}  // namespace dqn
