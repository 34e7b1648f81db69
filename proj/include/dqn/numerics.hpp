#pragma once

// Small dense linear algebra: vectors, row-major matrices, a Jacobi eigensolver
// for symmetric matrices, spectral norms and SPD solves. Dimensions in this
// project stay in the low hundreds, so nothing here is blocked or vectorized.

#include <cstddef>
#include <span>
#include <vector>

namespace dqn {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(double a, std::span<const double> x);

bool all_finite(std::span<const double> a);

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n, double scale = 1.0);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Vector multiply(const Matrix& a, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);
/// A^T A without forming the transpose.
Matrix gram(const Matrix& a);
Matrix subtract(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

/// True when |a_ij - a_ji| <= tol * max(1, max|a|) for all i, j.
bool is_symmetric(const Matrix& a, double tol = 1e-12);

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]

  double min() const { return values.front(); }
  double max() const { return values.back(); }
};

/// Cyclic Jacobi eigendecomposition. Throws ContractViolation on a
/// non-symmetric or non-square input.
SymEigen sym_eigs(const Matrix& a);

/// Largest singular value, via the largest eigenvalue of A^T A.
double spectral_norm(const Matrix& a);

/// Cholesky solve of A x = b. Throws NotPositiveDefinite naming the failing
/// pivot when A is not positive definite.
Vector solve_spd(const Matrix& a, std::span<const double> b);

/// Orthonormal basis of the column space of a tall matrix (Gram-Schmidt with
/// one reorthogonalization pass). Throws ContractViolation on rank deficiency.
Matrix orthonormal_columns(const Matrix& a);

}  // namespace dqn
