#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "dqn/numerics.hpp"

namespace dqn {

/// One admitted quasi-Newton correction. `s_hat` equals `s` for the BFGS
/// engine; `h0` is the scalar initialization the damping was computed against.
struct CurvaturePair {
  Vector s;
  Vector y;
  Vector s_hat;
  Vector y_hat;
  double theta = 1.0;
  double h0 = 1.0;
};

/// FIFO window of the most recent pairs, oldest first.
class CurvatureMemory {
 public:
  explicit CurvatureMemory(std::size_t capacity = 1);

  void push(CurvaturePair pair);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  const CurvaturePair& operator[](std::size_t i) const { return pairs_[i]; }
  const CurvaturePair& newest() const { return pairs_.back(); }

  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

 private:
  std::size_t capacity_;
  std::deque<CurvaturePair> pairs_;
};

/// 0.25 v^T (h0 I + eps I)^{-1} v, the lower bound the damping enforces on the
/// curvature product of every admitted pair.
double curvature_floor(std::span<const double> v, double h0, double epsilon);

/// Eigenvalue window [lower, upper] guaranteed for the built Hessian-inverse.
struct EigenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// x_new == x_old up to relative noise: such steps carry no curvature.
bool negligible_step(std::span<const double> s, std::span<const double> x_old);

namespace detail {

/// Damping weight shared by both engines; `v` is s_hat (DFP) or s (BFGS).
double theta_tilde(std::span<const double> v, std::span<const double> y, double h0, double epsilon);
double capped_theta(std::span<const double> v, std::span<const double> y, double h0, double epsilon,
                    double ltilde);

struct Damped {
  Vector y_hat;
  double theta;
};

/// y_hat = theta y + (1 - theta) v / (h0 + eps). In the damped branch the exact
/// curvature v^T y_hat equals the floor; rounding can land one ulp under it, so
/// theta is nudged down until the computed product clears the floor.
Damped damp(std::span<const double> v, std::span<const double> y, double h0, double epsilon, double ltilde);

}  // namespace detail

}  // namespace dqn
