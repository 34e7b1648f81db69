#include "dqn/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dqn/errors.hpp"

namespace dqn::bfgs {

namespace {

double checked_curvature(const CurvaturePair& pair) {
  const double sy = dot(pair.s, pair.y_hat);
  if (!(sy > 0.0))
    throw InvariantViolation("bfgs: stored pair has non-positive curvature s^T y_hat = " + std::to_string(sy));
  return sy;
}

}  // namespace

void Params::validate() const {
  const bool finite = std::isfinite(epsilon) && std::isfinite(beta) && std::isfinite(bcal) && std::isfinite(ltilde);
  if (!finite) throw ConfigError("bfgs: parameters must be finite");
  if (epsilon < 0.0) throw ConfigError("bfgs: epsilon must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("bfgs: beta must be > 0");
  if (bcal < beta) throw ConfigError("bfgs: bcal must be >= beta");
  if (!(ltilde > 0.0)) throw ConfigError("bfgs: ltilde must be > 0");
  if (memory < 1) throw ConfigError("bfgs: memory must be >= 1");
}

double initial_scalar(std::span<const double> s, std::span<const double> y, const Params& params) {
  const double yy = squared_norm(y);
  const double sy = dot(s, y);
  if (yy <= 1e-300 || sy <= 0.0) return params.beta;
  return std::min(std::max(sy / yy, params.beta), params.bcal);
}

double theta(std::span<const double> s, std::span<const double> y, double h0, const Params& params) {
  if (!(norm(s) > 0.0)) throw ContractViolation("bfgs::theta: s must be nonzero");
  return detail::capped_theta(s, y, h0, params.epsilon, params.ltilde);
}

std::optional<CurvaturePair> make_pair(std::span<const double> x_new, std::span<const double> x_old,
                                       std::span<const double> g_new, std::span<const double> g_old,
                                       const Params& params) {
  CurvaturePair pair;
  pair.s = subtract(x_new, x_old);
  pair.y = subtract(g_new, g_old);
  if (negligible_step(pair.s, x_old)) return std::nullopt;

  pair.s_hat = pair.s;
  pair.h0 = initial_scalar(pair.s, pair.y, params);
  auto damped = detail::damp(pair.s, pair.y, pair.h0, params.epsilon, params.ltilde);
  pair.theta = damped.theta;
  pair.y_hat = std::move(damped.y_hat);
  return pair;
}

Vector two_loop(const CurvatureMemory& memory, double h0, std::span<const double> g, OpCount* ops) {
  OpCount count;
  const std::size_t used = memory.size();
  std::vector<double> alpha(used);

  Vector q(g.begin(), g.end());
  for (std::size_t p = used; p-- > 0;) {
    const auto& pair = memory[p];
    alpha[p] = dot(pair.s, q) / checked_curvature(pair);
    axpy(-alpha[p], pair.y_hat, q);
    count.inner_products += 2;
    count.vector_updates += 1;
  }

  Vector r = scaled(h0, q);
  count.vector_updates += 1;

  for (std::size_t p = 0; p < used; ++p) {
    const auto& pair = memory[p];
    const double b = dot(pair.y_hat, r) / checked_curvature(pair);
    axpy(alpha[p] - b, pair.s, r);
    count.inner_products += 2;
    count.vector_updates += 1;
  }

  if (ops != nullptr) *ops = count;
  return r;
}

Matrix explicit_matrix(const CurvatureMemory& memory, double h0, std::size_t dim) {
  if (memory.empty()) return Matrix::identity(dim, h0);
  const std::size_t d = memory[0].s.size();
  Matrix h = Matrix::identity(d, h0);
  for (const auto& pair : memory) {
    const double sy = checked_curvature(pair);
    Matrix v = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) v(i, j) -= pair.y_hat[i] * pair.s[j] / sy;
    h = multiply(v.transposed(), multiply(h, v));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) h(i, j) += pair.s[i] * pair.s[j] / sy;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i) = 0.5 * (h(i, j) + h(j, i));
  }
  return h;
}

EigenBounds bounds(const Params& params) {
  const double b_eps = params.bcal + params.epsilon;
  const double omega = 4.0 * b_eps * (params.ltilde + 1.0 / (params.beta + params.epsilon));
  const double m = static_cast<double>(params.memory);
  const double lower = 1.0 / (1.0 / params.beta + m * omega * omega / (4.0 * b_eps));
  // overflows to +inf for large M, which is still a valid (vacuous) ceiling
  const double growth = std::exp(2.0 * m * std::log1p(omega));
  return {lower, growth * (params.bcal + 1.0 / (params.ltilde * (omega + 2.0)))};
}

bool pair_satisfies_damping(const CurvaturePair& pair, const Params& params) {
  return pair.theta > 0.0 && pair.theta <= 1.0 &&
         dot(pair.s, pair.y_hat) >= curvature_floor(pair.s, pair.h0, params.epsilon);
}

}  // namespace dqn::bfgs
