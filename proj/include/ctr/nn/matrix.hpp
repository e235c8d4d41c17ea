#ifndef CTR_NN_MATRIX_HPP_
#define CTR_NN_MATRIX_HPP_

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ctr/errors.hpp"

namespace ctr::nn {

// Dense row-major double matrix. Only the operations the layers need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  double* row(size_t r) { return data_.data() + r * cols_; }
  const double* row(size_t r) const { return data_.data() + r * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b, a: (n x k), b: (k x m).
Matrix matmul(const Matrix& a, const Matrix& b);

// out = a * b^T, a: (n x k), b: (m x k).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// out = a^T * b, a: (k x n), b: (k x m).
Matrix matmul_tn(const Matrix& a, const Matrix& b);

}  // namespace ctr::nn

#endif  // CTR_NN_MATRIX_HPP_
