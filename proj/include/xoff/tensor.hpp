#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace xoff {

using Scalar = double;

// Row-major strided 2-D view. `stride` is the distance between row starts.
template <typename T>
struct BasicMatrixView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  BasicMatrixView() = default;
  BasicMatrixView(T* d, std::size_t r, std::size_t c)
      : data(d), rows(r), cols(c), stride(c) {}
  BasicMatrixView(T* d, std::size_t r, std::size_t c, std::size_t s)
      : data(d), rows(r), cols(c), stride(s) {}

  // Allow MatrixView -> ConstMatrixView.
  template <typename U>
    requires std::is_same_v<T, const U>
  BasicMatrixView(const BasicMatrixView<U>& other)
      : data(other.data), rows(other.rows), cols(other.cols),
        stride(other.stride) {}

  T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return data[r * stride + c];
  }
  T* row(std::size_t r) const { return data + r * stride; }

  // Columns [first, first + count) of every row.
  BasicMatrixView columns(std::size_t first, std::size_t count) const {
    return {data + first, rows, count, stride};
  }
  BasicMatrixView rows_range(std::size_t first, std::size_t count) const {
    return {data + first * stride, count, cols, stride};
  }
};

using MatrixView = BasicMatrixView<Scalar>;
using ConstMatrixView = BasicMatrixView<const Scalar>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Scalar fill = 0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Scalar* row(std::size_t r) { return data_.data() + r * cols_; }
  const Scalar* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::span<Scalar> flat() { return data_; }
  std::span<const Scalar> flat() const { return data_; }

  MatrixView view() { return {data_.data(), rows_, cols_}; }
  ConstMatrixView view() const { return {data_.data(), rows_, cols_}; }
  operator MatrixView() { return view(); }
  operator ConstMatrixView() const { return view(); }

  void fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Scalar> data_;
};

}  // namespace xoff
