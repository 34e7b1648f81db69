#pragma once

// Reference implementations used only by tests. They share no code with the
// library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "dqn/numerics.hpp"

namespace oracle {

using dqn::Matrix;
using dqn::Vector;

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) a(i, j) = g(rng);
  return a;
}

inline Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  Matrix a = random_matrix(rng, n, n);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

inline Matrix random_spd(std::mt19937_64& rng, std::size_t n) {
  Matrix a = random_matrix(rng, n, n);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a(k, i) * a(k, j);
      s(i, j) = acc + (i == j ? 0.5 : 0.0);
    }
  return s;
}

inline Vector naive_matvec(const Matrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline double vec_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Number of eigenvalues of the symmetric matrix A below t, from the signs of
// the LDL^T pivots of A - tI (Sylvester's law of inertia).
inline std::size_t eigen_count_below(const Matrix& a, double t) {
  const std::size_t n = a.rows();
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = a(i, j) - (i == j ? t : 0.0);
  std::size_t negative = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double pivot = m[k * n + k];
    if (pivot == 0.0) pivot = -1e-300;
    if (pivot < 0.0) ++negative;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m[i * n + k] / pivot;
      for (std::size_t j = k + 1; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
    }
  }
  return negative;
}

// All eigenvalues, ascending, by bisection on the inertia count.
inline Vector eigenvalues_by_bisection(const Matrix& a, double tol = 1e-13) {
  const std::size_t n = a.rows();
  double radius = 0.0;  // Gershgorin
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += std::abs(a(i, j));
    radius = std::max(radius, r);
  }
  Vector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lo = -radius - 1.0, hi = radius + 1.0;
    while (hi - lo > tol * std::max(1.0, radius)) {
      const double mid = 0.5 * (lo + hi);
      if (eigen_count_below(a, mid) > k)
        hi = mid;
      else
        lo = mid;
    }
    out[k] = 0.5 * (lo + hi);
  }
  return out;
}

// Largest singular value by power iteration on A^T A.
inline double power_iteration_norm(const Matrix& a, std::size_t iterations = 20000) {
  std::mt19937_64 rng(12345);
  Vector v = random_vector(rng, a.cols());
  double lambda = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Vector av = naive_matvec(a, v);
    Vector w(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) w[j] += a(i, j) * av[i];
    const double nw = vec_norm(w);
    if (nw == 0.0) return 0.0;
    double vw = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) vw += v[j] * w[j];
    lambda = vw;
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / nw;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

// Inverse by Gauss-Jordan elimination with partial pivoting.
inline Matrix gauss_jordan_inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(p, c))) p = r;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(m(c, j), m(p, j));
      std::swap(inv(c, j), inv(p, j));
    }
    const double d = m(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      m(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        m(r, j) -= f * m(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// Central-difference gradient.
inline Vector finite_difference_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                                     double h = 1e-6) {
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[j]));
    xp[j] += step;
    xm[j] -= step;
    g[j] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace oracle
