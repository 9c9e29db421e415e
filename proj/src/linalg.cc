#include "urqe/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace urqe {

double DenseMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) throw std::invalid_argument("dimension mismatch");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> DenseMatrix::multiply_left(std::span<const double> x) const {
  if (x.size() != n_) throw std::invalid_argument("dimension mismatch");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) y[j] += x[i] * (*this)(i, j);
  }
  return y;
}

std::optional<LuFactorization> LuFactorization::factor(DenseMatrix a, double pivot_tolerance) {
  const std::size_t n = a.size();
  LuFactorization f;
  f.perm_.resize(n);
  std::iota(f.perm_.begin(), f.perm_.end(), std::size_t{0});
  f.min_pivot_ = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot_row = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        pivot_row = i;
      }
    }
    f.min_pivot_ = std::min(f.min_pivot_, best);
    if (!(best >= pivot_tolerance)) return std::nullopt;
    if (pivot_row != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(pivot_row, j));
      std::swap(f.perm_[k], f.perm_[pivot_row]);
    }
    const double pivot = a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = a(i, k) / pivot;
      a(i, k) = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= factor * a(k, j);
    }
  }
  f.lu_ = std::move(a);
  return f;
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  const std::size_t n = size();
  if (b.size() != n) throw std::invalid_argument("dimension mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  // L y = Pb (unit lower)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  }
  // U x = y
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
    x[i] /= lu_(i, i);
  }
  return x;
}

std::vector<double> LuFactorization::solve_transposed(std::span<const double> b) const {
  // A^T = U^T L^T P, so solve U^T w = b, L^T v = w, then x = P^T v.
  const std::size_t n = size();
  if (b.size() != n) throw std::invalid_argument("dimension mismatch");
  std::vector<double> w(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) w[i] -= lu_(j, i) * w[j];
    w[i] /= lu_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) w[i] -= lu_(j, i) * w[j];
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = w[i];
  return x;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace urqe
