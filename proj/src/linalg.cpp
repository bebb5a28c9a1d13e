#include "hamfold/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hamfold {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::submatrix(std::span<const std::size_t> row_idx,
                         std::span<const std::size_t> col_idx) const {
  Matrix s(row_idx.size(), col_idx.size());
  for (std::size_t r = 0; r < row_idx.size(); ++r)
    for (std::size_t c = 0; c < col_idx.size(); ++c) s(r, c) = (*this)(row_idx[r], col_idx[c]);
  return s;
}

double Matrix::max_abs() const { return hamfold::max_abs(data_); }

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) out[i] += a(i, k) * x[k];
  return out;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

RankInfo rank_complete_pivoting(const Matrix& m, double rel_tol) {
  RankInfo info;
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  info.row_order.resize(rows);
  info.col_order.resize(cols);
  std::iota(info.row_order.begin(), info.row_order.end(), 0);
  std::iota(info.col_order.begin(), info.col_order.end(), 0);
  info.max_entry = m.max_abs();
  if (info.max_entry == 0.0) return info;
  const double threshold = rel_tol * info.max_entry;

  Matrix work = m;
  // row_order/col_order double as the active permutation of `work`.
  for (std::size_t k = 0; k < std::min(rows, cols); ++k) {
    std::size_t pr = k, pc = k;
    double best = -1.0;
    for (std::size_t r = k; r < rows; ++r) {
      for (std::size_t c = k; c < cols; ++c) {
        const double v = std::abs(work(info.row_order[r], info.col_order[c]));
        if (v > best) {
          best = v;
          pr = r;
          pc = c;
        }
      }
    }
    if (best <= threshold) break;
    std::swap(info.row_order[k], info.row_order[pr]);
    std::swap(info.col_order[k], info.col_order[pc]);
    const std::size_t prow = info.row_order[k];
    const std::size_t pcol = info.col_order[k];
    const double pivot = work(prow, pcol);
    for (std::size_t r = k + 1; r < rows; ++r) {
      const std::size_t row = info.row_order[r];
      const double factor = work(row, pcol) / pivot;
      if (factor == 0.0) continue;
      for (std::size_t c = k; c < cols; ++c) {
        const std::size_t col = info.col_order[c];
        work(row, col) -= factor * work(prow, col);
      }
    }
    ++info.rank;
  }
  // Non-pivot indices keep their original relative order.
  std::sort(info.row_order.begin() + static_cast<std::ptrdiff_t>(info.rank), info.row_order.end());
  std::sort(info.col_order.begin() + static_cast<std::ptrdiff_t>(info.rank), info.col_order.end());
  return info;
}

LU::LU(const Matrix& a, double abs_tol) : lu_(a), perm_(a.rows()) {
  const std::size_t n = a.rows();
  std::iota(perm_.begin(), perm_.end(), 0);
  min_pivot_ = n == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(lu_(r, k)) > std::abs(lu_(p, k))) p = r;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(p, c));
      std::swap(perm_[k], perm_[p]);
    }
    const double pivot = lu_(k, k);
    min_pivot_ = std::min(min_pivot_, std::abs(pivot));
    if (std::abs(pivot) <= abs_tol) {
      singular_ = true;
      return;
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = lu_(r, k) / pivot;
      lu_(r, k) = f;
      for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
    }
  }
}

std::vector<double> LU::solve(std::span<const double> b) const {
  const std::size_t n = lu_.rows();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

Matrix LU::inverse() const {
  const std::size_t n = lu_.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    auto col = solve(e);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

}  // namespace hamfold
