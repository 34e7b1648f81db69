#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqn/numerics.hpp"

namespace dqn {

enum class LossKind { least_squares, logistic };

/// The private data of one node.
///
/// Least squares: f_i(x) = 1/2 ||A_i x - b_i||^2 with sample costs
/// f_il(x) = (m_i / 2) (a_l^T x - b_l)^2, so that f_i is the mean of its samples.
///
/// Logistic: f_il(x) = ln(1 + exp(-p_l o_l^T x)) + (iota / 2) ||x||^2 with
/// unit-norm features o_l and labels p_l in {-1, +1}.
struct LocalProblem {
  std::size_t node_id = 0;
  LossKind loss = LossKind::least_squares;
  double iota = 0.0;
  Matrix features;  // m_i x d
  Vector targets;   // b_i, or labels

  std::size_t samples() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

double local_loss(const LocalProblem& p, std::span<const double> x);
Vector full_grad(const LocalProblem& p, std::span<const double> x);
/// Gradient of sample l (0-based). Throws ContractViolation when l >= m_i.
Vector sample_grad(const LocalProblem& p, std::size_t l, std::span<const double> x);
/// out += scale * grad f_il(x), no allocation.
void accumulate_sample_grad(const LocalProblem& p, std::size_t l, std::span<const double> x,
                            double scale, std::span<double> out);
Matrix local_hessian(const LocalProblem& p, std::span<const double> x);

/// F(x) = (1/n) sum_i f_i(x).
struct GlobalProblem {
  std::vector<LocalProblem> locals;
  std::size_t dim = 0;
  LossKind loss = LossKind::least_squares;
  std::optional<Vector> x_star;

  std::size_t nodes() const noexcept { return locals.size(); }
};

double global_loss(const GlobalProblem& gp, std::span<const double> x);
Vector global_grad(const GlobalProblem& gp, std::span<const double> x);
Matrix full_hessian_global(const GlobalProblem& gp, std::span<const double> x);

/// Target spectrum of A^T A for the stacked synthetic design matrix.
struct SpectrumSpec {
  std::size_t dim = 8;
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  std::uint64_t seed = 0;
};

/// A = U diag(sqrt(lambda)) V^T split into n blocks of m rows; b_i = A_i x_true + noise.
GlobalProblem synth_least_squares(std::size_t n, std::size_t m, const SpectrumSpec& spec,
                                  double noise = 1e-2);

/// Stand-in for a real classification dataset: correlated Gaussian features,
/// noisy linear labels, unit-norm rows, split evenly across n nodes.
GlobalProblem synth_logistic(std::size_t n, std::size_t m, std::size_t d, double iota,
                             std::uint64_t seed);

/// Samples as dense rows with labels mapped to {-1, +1}.
struct Dataset {
  Matrix features;
  Vector labels;

  std::size_t samples() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

/// Parses "label idx:val idx:val ..." lines with 1-based indices. The feature
/// dimension is max(declared_dim, largest index seen). Labels must come from one
/// of {-1, +1}, {0, 1} or {1, 2}; 0 and 2 map to -1. Throws ConfigError naming
/// the offending line.
Dataset load_libsvm(std::istream& in, std::size_t declared_dim = 0);
Dataset load_libsvm(const std::string& path, std::size_t declared_dim = 0);

/// Scales every sample to unit Euclidean norm. All-zero samples are left as is.
Dataset normalize_samples(Dataset data);

/// Random even split over n nodes: sizes differ by at most one, the first
/// (N mod n) nodes get the extra sample.
GlobalProblem partition(const Dataset& data, std::size_t n, std::uint64_t seed, double iota);

struct NewtonResult {
  Vector x;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

/// Newton's method with backtracking from x = 0 until ||grad F|| <= tol.
/// Stores the solution in gp.x_star. Throws ConvergenceError after 100 steps.
NewtonResult centralized_newton(GlobalProblem& gp, double tol = 1e-12);

}  // namespace dqn
