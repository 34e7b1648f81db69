#pragma once

// Decentralized outer loop. Per iteration k every node i, reading only
// iteration-k values of its neighbors:
//
//   d_i   = H_i g_i
//   x_i' = sum_j w_ij x_j - alpha d_i
//   tau_i' = x_i' every T-th iteration, else tau_i
//   v_i'  = (1/b_i) sum_{l in S_i} (grad f_il(x_i') - grad f_il(tau_i')) + grad f_i(tau_i')
//   g_i'  = sum_j w_ij g_j + v_i' - v_i
//
// and then feeds (x_i' - x_i, g_i' - g_i) to its curvature engine.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dqn/bfgs.hpp"
#include "dqn/curvature.hpp"
#include "dqn/dfp.hpp"
#include "dqn/network.hpp"
#include "dqn/numerics.hpp"
#include "dqn/problems.hpp"

namespace dqn {

enum class Method { identity, dfp, bfgs };

std::string to_string(Method m);

struct RunConfig {
  Method method = Method::dfp;
  double alpha = 0.6;
  std::size_t period = 50;  // checkpoint refresh period T
  std::size_t batch = 10;   // b_i, used when batch_ratio is unset
  std::optional<double> batch_ratio;
  dfp::Params dfp;
  bfgs::Params bfgs;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  std::size_t audit_every = 10;  // 0 disables eigenvalue audits
  std::size_t threads = 1;

  /// Replace v_i by the exact local gradient (reference path for tests).
  bool exact_gradients = false;
  /// Called on every audited H before its eigenvalues are checked.
  std::function<void(std::size_t node, std::size_t iteration, Matrix& h)> audit_hook;

  /// Batch size for a node holding m samples.
  std::size_t batch_for(std::size_t m) const;
  void validate() const;
};

/// Eigenvalue window promised for the configured method ({1, 1} for identity).
EigenBounds method_bounds(const RunConfig& config);

struct NodeState {
  Vector x;
  Vector g;
  Vector v;
  Vector tau;
  Vector grad_at_tau;
  CurvatureMemory memory;
  Matrix h;  // DFP approximation built from `memory`; unused otherwise
  std::mt19937_64 rng;
  std::vector<std::size_t> sample_order;  // scratch for batch draws
  std::size_t batch = 1;
  std::size_t grad_evals = 0;
};

/// x = tau = x0, v = g = grad_at_tau = grad f_i(x0), empty memory.
std::vector<NodeState> init_states(const GlobalProblem& gp, const Vector& x0, const RunConfig& config);

/// Curvature matrix node i would apply at the current iteration, or nothing
/// while its memory is empty (the direction is then g itself).
std::optional<Matrix> current_hessian_inverse(const NodeState& node, const RunConfig& config);

struct AuditViolation {
  std::size_t node = 0;
  std::size_t iteration = 0;
  double eigenvalue = 0.0;
  double bound = 0.0;
  std::string what;
};

struct TraceRecord {
  std::size_t iteration = 0;
  double epochs = 0.0;
  double relative_error = 0.0;
  std::optional<double> min_eig;
  std::optional<double> max_eig;
  std::optional<double> bound_m1;
  std::optional<double> bound_m2;
};

struct Trace {
  std::vector<TraceRecord> records;
  double sigma = 0.0;
  std::size_t admitted_pairs = 0;
  std::size_t damping_violations = 0;  // admitted pairs breaking the curvature floor
  std::vector<AuditViolation> audit_violations;
  double max_tracking_gap = 0.0;  // relative mismatch of mean g and mean v
  std::size_t tracking_violations = 0;
  std::optional<std::string> diverged;

  bool audit_passed() const {
    return damping_violations == 0 && audit_violations.empty() && tracking_violations == 0;
  }
};

inline constexpr double kTrackingTolerance = 1e-11;

/// Step-by-step driver; `run` wraps it.
class Simulation {
 public:
  Simulation(const GlobalProblem& gp, const Matrix& mixing, RunConfig config, Vector x0 = {});

  /// One synchronous round. Throws DivergedError on a non-finite state.
  void step();

  std::size_t iteration() const noexcept { return iteration_; }
  const std::vector<NodeState>& states() const noexcept { return states_; }
  const RunConfig& config() const noexcept { return config_; }

  /// sum_i ||x_i - x*||^2 / sum_i ||x_i^0 - x*||^2
  double relative_error() const;
  /// Mean over nodes of (gradient evaluations / m_i).
  double epochs() const;
  /// ||mean g - mean v|| relative to the largest ||g_i||, ||v_i|| seen so far.
  double tracking_gap() const;

  /// Eigen-audit of every node's current approximation; fills the record's
  /// eigen columns and appends violations.
  void audit(TraceRecord& record, std::vector<AuditViolation>& violations) const;

  std::size_t admitted_pairs() const noexcept { return admitted_; }
  std::size_t damping_violations() const noexcept { return damping_violations_; }

 private:
  struct Next {
    Vector x, g, v;
    std::optional<CurvaturePair> pair;
  };

  void update_node(std::size_t i, Next& next);

  const GlobalProblem& gp_;
  RunConfig config_;
  std::vector<std::vector<std::pair<std::size_t, double>>> weights_;  // row i of W, self included
  std::vector<NodeState> states_;
  std::vector<Next> next_;
  double initial_distance_ = 0.0;
  double tracking_scale_ = 0.0;
  std::size_t iteration_ = 0;
  std::size_t admitted_ = 0;
  std::size_t damping_violations_ = 0;
};

/// Runs config.iterations rounds from x0 = 0. gp.x_star must be set. A
/// divergence ends the trace early and is reported in Trace::diverged.
Trace run(const GlobalProblem& gp, const MixingMatrix& mixing, const RunConfig& config);
Trace run(const GlobalProblem& gp, const Topology& topology, const RunConfig& config);

}  // namespace dqn
