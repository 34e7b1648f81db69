#include "dqn/dfp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dqn/errors.hpp"

namespace dqn::dfp {

void Params::validate() const {
  const bool finite = std::isfinite(rho) && std::isfinite(epsilon) && std::isfinite(beta) &&
                      std::isfinite(bcal) && std::isfinite(ltilde);
  if (!finite) throw ConfigError("dfp: parameters must be finite");
  if (rho < 0.0) throw ConfigError("dfp: rho must be >= 0");
  if (epsilon < 0.0) throw ConfigError("dfp: epsilon must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("dfp: beta must be > 0");
  if (bcal < beta) throw ConfigError("dfp: bcal must be >= beta");
  if (!(ltilde > 0.0)) throw ConfigError("dfp: ltilde must be > 0");
  if (memory < 1) throw ConfigError("dfp: memory must be >= 1");
}

double initial_scalar(std::span<const double> s, std::span<const double> y, const Params& params) {
  const double sy = dot(s, y);
  if (sy <= 1e-300) return params.beta;
  const double ratio = squared_norm(s) / sy + params.rho;
  return std::min(std::max(ratio, params.beta), params.bcal);
}

double theta_tilde(std::span<const double> s_hat, std::span<const double> y, double h0, const Params& params) {
  return detail::theta_tilde(s_hat, y, h0, params.epsilon);
}

double theta(std::span<const double> s_hat, std::span<const double> y, double h0, const Params& params) {
  if (!(norm(s_hat) > 0.0)) throw ContractViolation("dfp::theta: s_hat must be nonzero");
  return detail::capped_theta(s_hat, y, h0, params.epsilon, params.ltilde);
}

std::optional<CurvaturePair> make_pair(std::span<const double> x_new, std::span<const double> x_old,
                                       std::span<const double> g_new, std::span<const double> g_old,
                                       const Params& params) {
  CurvaturePair pair;
  pair.s = subtract(x_new, x_old);
  pair.y = subtract(g_new, g_old);
  if (negligible_step(pair.s, x_old)) return std::nullopt;

  pair.s_hat = pair.s;
  axpy(-params.rho, pair.y, pair.s_hat);
  if (norm(pair.s_hat) <= 1e-300) return std::nullopt;

  pair.h0 = initial_scalar(pair.s, pair.y, params);
  auto damped = detail::damp(pair.s_hat, pair.y, pair.h0, params.epsilon, params.ltilde);
  pair.theta = damped.theta;
  pair.y_hat = std::move(damped.y_hat);
  return pair;
}

Matrix build(const CurvatureMemory& memory, std::span<const double> s_k, std::span<const double> y_k,
             const Params& params) {
  if (memory.empty()) throw ContractViolation("dfp::build: memory is empty");
  const std::size_t d = s_k.size();
  Matrix h = Matrix::identity(d, initial_scalar(s_k, y_k, params));

  Vector hy(d);
  for (const auto& pair : memory) {
    const auto& s = pair.s_hat;
    const auto& y = pair.y_hat;
    hy = multiply(h, y);
    const double sy = dot(s, y);
    const double yhy = dot(y, hy);
    if (!(sy > 0.0) || !(yhy > 0.0))
      throw InvariantViolation("dfp::build: non-positive curvature denominator (s^T y = " + std::to_string(sy) +
                               ", y^T H y = " + std::to_string(yhy) + ")");
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) h(i, j) += s[i] * s[j] / sy - hy[i] * hy[j] / yhy;
      h(i, i) += params.rho;
    }
  }
  return h;
}

EigenBounds bounds(const Params& params) {
  const double b_eps = params.bcal + params.epsilon;
  const double omega = 4.0 * b_eps * (params.ltilde + 1.0 / (params.beta + params.epsilon));
  const double m = static_cast<double>(params.memory);
  // (1 + omega)^(-2M) underflows to 0 for large M; the bound then reads rho.
  const double decay = std::exp(-2.0 * m * std::log1p(omega));
  return {params.rho + decay / (1.0 / params.beta + 1.0 / (4.0 * b_eps)),
          params.bcal + m * (4.0 * params.bcal + 4.0 * params.epsilon + params.rho)};
}

Vector apply(const Matrix& h, std::span<const double> g) { return multiply(h, g); }

bool pair_satisfies_damping(const CurvaturePair& pair, const Params& params) {
  return pair.theta > 0.0 && pair.theta <= 1.0 &&
         dot(pair.s_hat, pair.y_hat) >= curvature_floor(pair.s_hat, pair.h0, params.epsilon);
}

}  // namespace dqn::dfp
