#include "dqn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dqn/errors.hpp"

namespace dqn {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ContractViolation(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) {
  // hypot-style scaling is unnecessary at the magnitudes we see
  return std::sqrt(squared_norm(a));
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(double a, std::span<const double> x) {
  Vector out(x.begin(), x.end());
  for (auto& v : out) v *= a;
  return out;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::identity(std::size_t n, double scale) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  require_same_size(a.cols(), x.size(), "multiply");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols(), b.rows(), "multiply");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix gram(const Matrix& a) {
  const std::size_t d = a.cols();
  Matrix out(d, d);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double ri = row[i];
      for (std::size_t j = i; j < d; ++j) out(i, j) += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation("matrix subtract: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

double frobenius_norm(const Matrix& a) { return norm(a.data()); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, max_abs(a));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (!(std::abs(a(i, j) - a(j, i)) <= tol * scale)) return false;
  return true;
}

SymEigen sym_eigs(const Matrix& input) {
  if (input.rows() != input.cols()) throw ContractViolation("sym_eigs: matrix is not square");
  if (!is_symmetric(input)) throw ContractViolation("sym_eigs: matrix is not symmetric");

  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  if (n == 0) return {};

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double scale = frobenius_norm(input);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal() <= 1e-16 * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation zeroing a(p, q); t is the smaller root of t^2 + 2 t zeta - 1 = 0.
        const double zeta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const auto eig = sym_eigs(gram(a));
  return std::sqrt(std::max(0.0, eig.max()));
}

Vector solve_spd(const Matrix& a, std::span<const double> b) {
  if (a.rows() != a.cols()) throw ContractViolation("solve_spd: matrix is not square");
  require_same_size(a.rows(), b.size(), "solve_spd");
  const std::size_t n = a.rows();

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw NotPositiveDefinite(j, diag);
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sum = a(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      l(i, j) = sum / ljj;
    }
  }

  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= l(k, i) * x[k];
    x[i] /= l(i, i);
  }
  return x;
}

Matrix orthonormal_columns(const Matrix& a) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (cols > rows) throw ContractViolation("orthonormal_columns: more columns than rows");

  // column-major scratch so each column is contiguous
  std::vector<Vector> q(cols, Vector(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) q[j][i] = a(i, j);

  for (std::size_t j = 0; j < cols; ++j) {
    const double original = norm(q[j]);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) axpy(-dot(q[k], q[j]), q[k], q[j]);
    }
    const double len = norm(q[j]);
    if (!(len > 1e-10 * original)) throw ContractViolation("orthonormal_columns: rank deficient input");
    for (auto& v : q[j]) v /= len;
  }

  Matrix out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) out(i, j) = q[j][i];
  return out;
}

}  // namespace dqn
