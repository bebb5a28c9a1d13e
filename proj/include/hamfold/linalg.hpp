#pragma once

// Small dense linear algebra with explicit pivot thresholds. Matrices here are
// at most n x n for configuration dimension n, so row-major std::vector
// storage is enough.

#include <cstddef>
#include <span>
#include <vector>

namespace hamfold {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Matrix transposed() const;
  Matrix submatrix(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const;
  double max_abs() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend std::vector<double> operator*(const Matrix& a, std::span<const double> x);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Result of complete-pivoting Gaussian elimination: the numeric rank and the
/// pivot rows/columns in elimination order (first `rank` entries are the
/// independent ones, the rest follow in original order).
struct RankInfo {
  std::size_t rank = 0;
  std::vector<std::size_t> row_order;
  std::vector<std::size_t> col_order;
  double max_entry = 0.0;
};

/// Pivots below rel_tol * max|initial entry| count as zero.
RankInfo rank_complete_pivoting(const Matrix& m, double rel_tol);

/// LU factorization with partial pivoting. `singular()` is set when a pivot
/// magnitude falls below abs_tol.
class LU {
 public:
  LU(const Matrix& a, double abs_tol);

  bool singular() const { return singular_; }
  double min_pivot() const { return min_pivot_; }
  std::vector<double> solve(std::span<const double> b) const;
  Matrix inverse() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  bool singular_ = false;
  double min_pivot_ = 0.0;
};

double max_abs(std::span<const double> v);

}  // namespace hamfold
