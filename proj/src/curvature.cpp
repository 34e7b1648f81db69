#include "dqn/curvature.hpp"

#include <algorithm>

#include "dqn/errors.hpp"

namespace dqn {

CurvatureMemory::CurvatureMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ContractViolation("curvature memory needs capacity >= 1");
}

void CurvatureMemory::push(CurvaturePair pair) {
  if (pairs_.size() == capacity_) pairs_.pop_front();
  pairs_.push_back(std::move(pair));
}

double curvature_floor(std::span<const double> v, double h0, double epsilon) {
  return 0.25 * squared_norm(v) / (h0 + epsilon);
}

bool negligible_step(std::span<const double> s, std::span<const double> x_old) {
  return norm(s) <= 1e-12 * std::max(1.0, norm(x_old));
}

namespace detail {

double theta_tilde(std::span<const double> v, std::span<const double> y, double h0, double epsilon) {
  const double scaled = squared_norm(v) / (h0 + epsilon);  // v^T (H0 + eps I)^{-1} v
  const double vy = dot(v, y);
  if (vy <= 0.25 * scaled) return 0.75 * scaled / (scaled - vy);
  return 1.0;
}

double capped_theta(std::span<const double> v, std::span<const double> y, double h0, double epsilon,
                    double ltilde) {
  const double tilde = theta_tilde(v, y, h0, epsilon);
  const double y_norm = norm(y);
  if (y_norm <= 1e-300) return tilde;
  return std::min(tilde, ltilde * norm(v) / y_norm);
}

Damped damp(std::span<const double> v, std::span<const double> y, double h0, double epsilon, double ltilde) {
  if (!(norm(v) > 1e-300)) throw ContractViolation("damping needs a nonzero variable variation");
  const double inv = 1.0 / (h0 + epsilon);
  const double floor = curvature_floor(v, h0, epsilon);

  Damped out{Vector(v.size()), capped_theta(v, y, h0, epsilon, ltilde)};
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (std::size_t j = 0; j < v.size(); ++j) out.y_hat[j] = out.theta * y[j] + (1.0 - out.theta) * inv * v[j];
    if (dot(v, out.y_hat) >= floor) return out;
    out.theta *= 1.0 - 1e-14;
  }
  throw InvariantViolation("damping failed to reach the curvature floor");
}

}  // namespace detail

}  // namespace dqn
