#pragma once

// Damped regularized limited-memory DFP.
//
// Each admitted pair stores s_hat = s - rho y and a damped y_hat that keeps
// s_hat^T y_hat >= 0.25 ||s_hat||^2 / (h0 + eps). Every outer iteration the
// Hessian-inverse approximation is rebuilt from the scalar initialization h0 I
// by applying one regularized DFP update per stored pair, oldest first:
//
//   H <- H + s_hat s_hat^T / (s_hat^T y_hat) - H y_hat y_hat^T H / (y_hat^T H y_hat) + rho I
//
// The damping plus the restart from a clamped scalar keep every eigenvalue of
// H inside bounds(params).

#include <cstddef>
#include <optional>
#include <span>

#include "dqn/curvature.hpp"
#include "dqn/numerics.hpp"

namespace dqn::dfp {

struct Params {
  double rho = 1e-5;
  double epsilon = 3.0;
  double beta = 0.04;
  double bcal = 1e4;
  double ltilde = 10.0;
  std::size_t memory = 20;

  /// Throws ConfigError unless every field is finite, rho, epsilon >= 0,
  /// beta > 0, bcal >= beta, ltilde > 0 and memory >= 1.
  void validate() const;
};

/// min{ max{ s^T s / s^T y + rho, beta }, bcal }, with beta when s^T y is not positive.
double initial_scalar(std::span<const double> s, std::span<const double> y, const Params& params);

/// Unclipped damping weight: 1 when s_hat^T y clears a quarter of
/// ||s_hat||^2 / (h0 + eps), otherwise the weight that lands exactly on it.
double theta_tilde(std::span<const double> s_hat, std::span<const double> y, double h0, const Params& params);

/// theta_tilde capped by ltilde ||s_hat|| / ||y||. Requires ||s_hat|| > 0.
double theta(std::span<const double> s_hat, std::span<const double> y, double h0, const Params& params);

/// Builds the damped pair for the step (x_old, g_old) -> (x_new, g_new), or
/// nothing when the step is negligible or s_hat vanishes.
std::optional<CurvaturePair> make_pair(std::span<const double> x_new, std::span<const double> x_old,
                                       std::span<const double> g_new, std::span<const double> g_old,
                                       const Params& params);

/// Explicit d x d approximation from the stored pairs. `s_k`, `y_k` are the raw
/// differences of the newest pair and set the scalar initialization.
Matrix build(const CurvatureMemory& memory, std::span<const double> s_k, std::span<const double> y_k,
             const Params& params);

EigenBounds bounds(const Params& params);

Vector apply(const Matrix& h, std::span<const double> g);

/// The damping guarantee for a stored pair: 0 < theta <= 1 and
/// s_hat^T y_hat >= 0.25 ||s_hat||^2 / (h0 + eps).
bool pair_satisfies_damping(const CurvaturePair& pair, const Params& params);

}  // namespace dqn::dfp
