#ifndef URQE_LINALG_H_
#define URQE_LINALG_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace urqe {

// Square row-major matrix sized for per-query systems (a few dozen rows).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }

  double trace() const;
  std::vector<double> multiply(std::span<const double> x) const;
  // x^T A
  std::vector<double> multiply_left(std::span<const double> x) const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// LU with row pivoting, PA = LU.
class LuFactorization {
 public:
  // nullopt when some pivot magnitude falls below `pivot_tolerance`.
  static std::optional<LuFactorization> factor(DenseMatrix a, double pivot_tolerance);

  std::size_t size() const { return lu_.size(); }
  // Solves A x = b.
  std::vector<double> solve(std::span<const double> b) const;
  // Solves A^T x = b.
  std::vector<double> solve_transposed(std::span<const double> b) const;
  // Smallest pivot magnitude seen during elimination.
  double min_pivot() const { return min_pivot_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;  // row i of PA is row perm_[i] of A
  double min_pivot_ = 0.0;
};

double max_abs(std::span<const double> v);

}  // namespace urqe

#endif  // URQE_LINALG_H_
