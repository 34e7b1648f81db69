#pragma once

// Damped limited-memory BFGS. No regularization term, so the product H g is
// available through the two-loop recursion in O(M d); the explicit matrix is
// only formed for tests and eigenvalue audits.

#include <cstddef>
#include <optional>
#include <span>

#include "dqn/curvature.hpp"
#include "dqn/numerics.hpp"

namespace dqn::bfgs {

struct Params {
  double epsilon = 3.0;
  double beta = 0.04;
  double bcal = 1e4;
  double ltilde = 10.0;
  std::size_t memory = 20;

  void validate() const;
};

/// min{ max{ s^T y / y^T y, beta }, bcal }; beta when y vanishes or s^T y <= 0.
double initial_scalar(std::span<const double> s, std::span<const double> y, const Params& params);

double theta(std::span<const double> s, std::span<const double> y, double h0, const Params& params);

std::optional<CurvaturePair> make_pair(std::span<const double> x_new, std::span<const double> x_old,
                                       std::span<const double> g_new, std::span<const double> g_old,
                                       const Params& params);

/// Work done by one two_loop call.
struct OpCount {
  std::size_t inner_products = 0;
  std::size_t vector_updates = 0;  // scaled additions and the initial scaling
};

/// H g by the two-loop recursion with scalar initialization h0. Empty memory
/// gives h0 g.
Vector two_loop(const CurvatureMemory& memory, double h0, std::span<const double> g, OpCount* ops = nullptr);

/// H = V^T H V + s s^T / (s^T y_hat) with V = I - y_hat s^T / (s^T y_hat),
/// applied oldest to newest from h0 I. `dim` sizes the result when memory is
/// empty; otherwise it is taken from the stored pairs.
Matrix explicit_matrix(const CurvatureMemory& memory, double h0, std::size_t dim = 0);

EigenBounds bounds(const Params& params);

bool pair_satisfies_damping(const CurvaturePair& pair, const Params& params);

}  // namespace dqn::bfgs
