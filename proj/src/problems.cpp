#include "dqn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dqn/errors.hpp"

namespace dqn {

namespace {

// sigma(t) = 1 / (1 + exp(-t)) without overflow for large |t|
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// ln(1 + exp(t))
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void require_dim(const LocalProblem& p, std::span<const double> x) {
  if (x.size() != p.dim())
    throw ContractViolation("node " + std::to_string(p.node_id) + ": expected a vector of dimension " +
                            std::to_string(p.dim()) + ", got " + std::to_string(x.size()));
}

}  // namespace

double local_loss(const LocalProblem& p, std::span<const double> x) {
  require_dim(p, x);
  double total = 0.0;
  for (std::size_t l = 0; l < p.samples(); ++l) {
    const double z = dot(p.features.row(l), x);
    if (p.loss == LossKind::least_squares) {
      const double r = z - p.targets[l];
      total += 0.5 * r * r;
    } else {
      total += softplus(-p.targets[l] * z);
    }
  }
  if (p.loss == LossKind::logistic) {
    total = total / static_cast<double>(p.samples()) + 0.5 * p.iota * squared_norm(x);
  }
  return total;
}

void accumulate_sample_grad(const LocalProblem& p, std::size_t l, std::span<const double> x,
                            double scale, std::span<double> out) {
  if (l >= p.samples())
    throw ContractViolation("node " + std::to_string(p.node_id) + ": sample index " + std::to_string(l) +
                            " out of range (m_i = " + std::to_string(p.samples()) + ")");
  require_dim(p, x);
  const auto a = p.features.row(l);
  const double z = dot(a, x);
  if (p.loss == LossKind::least_squares) {
    const double coeff = static_cast<double>(p.samples()) * (z - p.targets[l]);
    axpy(scale * coeff, a, out);
  } else {
    const double label = p.targets[l];
    axpy(-scale * label * sigmoid(-label * z), a, out);
    axpy(scale * p.iota, x, out);
  }
}

Vector sample_grad(const LocalProblem& p, std::size_t l, std::span<const double> x) {
  Vector g(p.dim(), 0.0);
  accumulate_sample_grad(p, l, x, 1.0, g);
  return g;
}

Vector full_grad(const LocalProblem& p, std::span<const double> x) {
  require_dim(p, x);
  Vector g(p.dim(), 0.0);
  const std::size_t m = p.samples();
  if (p.loss == LossKind::least_squares) {
    for (std::size_t l = 0; l < m; ++l) {
      const auto a = p.features.row(l);
      axpy(dot(a, x) - p.targets[l], a, g);
    }
  } else {
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t l = 0; l < m; ++l) {
      const auto a = p.features.row(l);
      const double label = p.targets[l];
      axpy(-inv_m * label * sigmoid(-label * dot(a, x)), a, g);
    }
    axpy(p.iota, x, g);
  }
  return g;
}

Matrix local_hessian(const LocalProblem& p, std::span<const double> x) {
  require_dim(p, x);
  if (p.loss == LossKind::least_squares) return gram(p.features);

  const std::size_t d = p.dim();
  const double inv_m = 1.0 / static_cast<double>(p.samples());
  Matrix h(d, d);
  for (std::size_t l = 0; l < p.samples(); ++l) {
    const auto a = p.features.row(l);
    const double s = sigmoid(dot(a, x));
    const double w = inv_m * s * (1.0 - s);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) h(i, j) += w * a[i] * a[j];
  }
  for (std::size_t i = 0; i < d; ++i) {
    h(i, i) += p.iota;
    for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i);
  }
  return h;
}

double global_loss(const GlobalProblem& gp, std::span<const double> x) {
  double total = 0.0;
  for (const auto& p : gp.locals) total += local_loss(p, x);
  return total / static_cast<double>(gp.nodes());
}

Vector global_grad(const GlobalProblem& gp, std::span<const double> x) {
  Vector g(gp.dim, 0.0);
  for (const auto& p : gp.locals) axpy(1.0, full_grad(p, x), g);
  for (auto& v : g) v /= static_cast<double>(gp.nodes());
  return g;
}

Matrix full_hessian_global(const GlobalProblem& gp, std::span<const double> x) {
  Matrix h(gp.dim, gp.dim);
  for (const auto& p : gp.locals) {
    const Matrix hi = local_hessian(p, x);
    for (std::size_t i = 0; i < gp.dim; ++i)
      for (std::size_t j = 0; j < gp.dim; ++j) h(i, j) += hi(i, j);
  }
  const double inv_n = 1.0 / static_cast<double>(gp.nodes());
  for (std::size_t i = 0; i < gp.dim; ++i)
    for (std::size_t j = 0; j < gp.dim; ++j) h(i, j) *= inv_n;
  return h;
}

GlobalProblem synth_least_squares(std::size_t n, std::size_t m, const SpectrumSpec& spec, double noise) {
  const std::size_t d = spec.dim;
  if (n == 0 || m == 0 || d == 0) throw ConfigError("synthetic least squares: n, m and d must be positive");
  if (n * m < d) throw ConfigError("synthetic least squares: n*m must be at least d");
  if (!(spec.lambda_min > 0.0) || !(spec.lambda_max >= spec.lambda_min))
    throw ConfigError("synthetic least squares: need 0 < lambda_min <= lambda_max");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(spec.lambda_min, spec.lambda_max);

  Vector eigenvalues(d);
  eigenvalues[0] = spec.lambda_min;
  if (d > 1) eigenvalues[d - 1] = spec.lambda_max;
  for (std::size_t j = 1; j + 1 < d; ++j) eigenvalues[j] = uniform(rng);

  const std::size_t rows = n * m;
  Matrix g_left(rows, d);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) g_left(i, j) = gauss(rng);
  Matrix g_right(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g_right(i, j) = gauss(rng);

  const Matrix u = orthonormal_columns(g_left);
  const Matrix v = orthonormal_columns(g_right);

  // A = U diag(sqrt(lambda)) V^T
  Matrix sv_t(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double sv = std::sqrt(eigenvalues[i]);
    for (std::size_t j = 0; j < d; ++j) sv_t(i, j) = sv * v(j, i);
  }
  const Matrix a = multiply(u, sv_t);

  Vector x_true(d);
  for (auto& xi : x_true) xi = gauss(rng);

  GlobalProblem gp;
  gp.dim = d;
  gp.loss = LossKind::least_squares;
  gp.locals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = gp.locals[i];
    p.node_id = i;
    p.loss = LossKind::least_squares;
    p.features = Matrix(m, d);
    p.targets.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
      const auto src = a.row(i * m + l);
      std::copy(src.begin(), src.end(), p.features.row(l).begin());
      p.targets[l] = dot(src, x_true) + noise * gauss(rng);
    }
  }
  return gp;
}

GlobalProblem synth_logistic(std::size_t n, std::size_t m, std::size_t d, double iota, std::uint64_t seed) {
  if (n == 0 || m == 0 || d == 0) throw ConfigError("synthetic logistic: n, m and d must be positive");
  if (!(iota > 0.0)) throw ConfigError("synthetic logistic: iota must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution flip(0.1);

  // Feature scales decay geometrically over one decade; a shared factor adds correlation.
  Vector scales(d);
  for (std::size_t j = 0; j < d; ++j)
    scales[j] = std::pow(10.0, -static_cast<double>(j) / static_cast<double>(std::max<std::size_t>(d - 1, 1)));
  Vector x_true(d);
  for (auto& v : x_true) v = 3.0 * gauss(rng);

  Dataset data{Matrix(n * m, d), Vector(n * m)};
  for (std::size_t s = 0; s < n * m; ++s) {
    const double shared = gauss(rng);
    auto row = data.features.row(s);
    for (std::size_t j = 0; j < d; ++j) row[j] = scales[j] * (gauss(rng) + 0.5 * shared) + 0.2;
    double label = dot(row, x_true) >= 0.0 ? 1.0 : -1.0;
    if (flip(rng)) label = -label;
    data.labels[s] = label;
  }
  return partition(normalize_samples(std::move(data)), n, seed ^ 0x9e3779b97f4a7c15ULL, iota);
}

Dataset normalize_samples(Dataset data) {
  for (std::size_t s = 0; s < data.samples(); ++s) {
    auto row = data.features.row(s);
    const double len = norm(row);
    if (len > 0.0)
      for (auto& v : row) v /= len;
  }
  return data;
}

GlobalProblem partition(const Dataset& data, std::size_t n, std::uint64_t seed, double iota) {
  const std::size_t total = data.samples();
  if (n == 0) throw ConfigError("partition: need at least one node");
  if (total < n)
    throw ConfigError("partition: " + std::to_string(total) + " samples cannot cover " + std::to_string(n) +
                      " nodes");

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  GlobalProblem gp;
  gp.dim = data.dim();
  gp.loss = LossKind::logistic;
  gp.locals.resize(n);
  const std::size_t base = total / n;
  const std::size_t extra = total % n;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = base + (i < extra ? 1 : 0);
    auto& p = gp.locals[i];
    p.node_id = i;
    p.loss = LossKind::logistic;
    p.iota = iota;
    p.features = Matrix(count, gp.dim);
    p.targets.resize(count);
    for (std::size_t l = 0; l < count; ++l, ++cursor) {
      const auto src = data.features.row(order[cursor]);
      std::copy(src.begin(), src.end(), p.features.row(l).begin());
      p.targets[l] = data.labels[order[cursor]];
    }
  }
  return gp;
}

NewtonResult centralized_newton(GlobalProblem& gp, double tol) {
  if (gp.nodes() == 0) throw ContractViolation("centralized_newton: empty problem");
  constexpr std::size_t kMaxIterations = 100;

  NewtonResult result;
  result.x.assign(gp.dim, 0.0);
  Vector grad = global_grad(gp, result.x);
  result.grad_norm = norm(grad);

  while (result.grad_norm > tol) {
    if (result.iterations == kMaxIterations)
      throw ConvergenceError("centralized Newton did not converge in 100 iterations (gradient norm " +
                             std::to_string(result.grad_norm) + ")");
    const Matrix h = full_hessian_global(gp, result.x);
    const Vector step = solve_spd(h, grad);

    // Armijo backtracking on F. Near the optimum F no longer resolves the
    // decrease, so a step that halves the gradient norm is accepted too.
    double t = 1.0;
    const double f0 = global_loss(gp, result.x);
    const double slope = dot(grad, step);
    Vector trial(gp.dim);
    Vector trial_grad;
    for (;;) {
      for (std::size_t j = 0; j < gp.dim; ++j) trial[j] = result.x[j] - t * step[j];
      trial_grad = global_grad(gp, trial);
      if (gp.loss == LossKind::least_squares || norm(trial_grad) <= 0.5 * result.grad_norm ||
          global_loss(gp, trial) <= f0 - 1e-4 * t * slope)
        break;
      t *= 0.5;
      if (t < 1e-10)
        throw ConvergenceError("centralized Newton stalled at gradient norm " + std::to_string(result.grad_norm));
    }
    ++result.iterations;
    result.x = trial;
    grad = trial_grad;
    result.grad_norm = norm(grad);
  }
  gp.x_star = result.x;
  return result;
}

}  // namespace dqn
