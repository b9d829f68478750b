#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "tim4rec/errors.hpp"

namespace tim4rec {

template <class Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatX = MatrixRM<double>;
using VecX = Vector<double>;

// Dense row-major array with a dynamic shape. Storage is a flat vector; Eigen
// maps give zero-copy matrix/vector views for the heavy math. Rank is small
// (<= 3 in practice: [T], [T x C], [H x T x T], ...).
template <class Scalar>
class TensorT {
 public:
  using Shape = std::vector<int64_t>;

  TensorT() = default;

  explicit TensorT(Shape shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_numel(shape_)), Scalar(0));
  }

  TensorT(Shape shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<int64_t>(data_.size()))
      throw ShapeError("tensor: shape product " + std::to_string(checked_numel(shape_)) +
                       " does not match data length " + std::to_string(data_.size()));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, Scalar v) {
    TensorT t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static TensorT ones(Shape shape) { return full(std::move(shape), Scalar(1)); }

  static TensorT scalar(Scalar v) { return TensorT({1}, {v}); }

  static TensorT from(Shape shape, std::initializer_list<Scalar> vals) {
    return TensorT(std::move(shape), std::vector<Scalar>(vals));
  }

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }

  int64_t dim(int64_t i) const {
    if (i < 0 || i >= rank()) throw ShapeError("tensor: dim index out of range");
    return shape_[static_cast<size_t>(i)];
  }

  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::vector<Scalar>& storage() { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  Scalar& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  Scalar operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  Scalar& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * dim(1) + j)]; }
  Scalar at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * dim(1) + j)]; }
  Scalar& at(int64_t i, int64_t j, int64_t k) {
    return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }
  Scalar at(int64_t i, int64_t j, int64_t k) const {
    return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Whole tensor viewed as a rows x cols matrix (row-major reinterpretation).
  Eigen::Map<MatrixRM<Scalar>> mat(int64_t rows, int64_t cols) {
    if (rows * cols != size()) throw ShapeError("tensor: matrix view size mismatch");
    return {data_.data(), rows, cols};
  }
  Eigen::Map<const MatrixRM<Scalar>> mat(int64_t rows, int64_t cols) const {
    if (rows * cols != size()) throw ShapeError("tensor: matrix view size mismatch");
    return {data_.data(), rows, cols};
  }

  // Rank-2 view with the tensor's own dims.
  Eigen::Map<MatrixRM<Scalar>> mat() {
    if (rank() != 2) throw ShapeError("tensor: mat() needs rank 2, got " + std::to_string(rank()));
    return mat(shape_[0], shape_[1]);
  }
  Eigen::Map<const MatrixRM<Scalar>> mat() const {
    if (rank() != 2) throw ShapeError("tensor: mat() needs rank 2, got " + std::to_string(rank()));
    return mat(shape_[0], shape_[1]);
  }

  // Flat vector view of all elements.
  Eigen::Map<Vector<Scalar>> vec() { return {data_.data(), size()}; }
  Eigen::Map<const Vector<Scalar>> vec() const { return {data_.data(), size()}; }

  // Rank-3 tensors: slice i along the leading axis, viewed dim(1) x dim(2).
  Eigen::Map<MatrixRM<Scalar>> slice(int64_t i) {
    if (rank() != 3) throw ShapeError("tensor: slice() needs rank 3");
    if (i < 0 || i >= dim(0)) throw ShapeError("tensor: slice index out of range");
    return {data_.data() + i * dim(1) * dim(2), dim(1), dim(2)};
  }
  Eigen::Map<const MatrixRM<Scalar>> slice(int64_t i) const {
    if (rank() != 3) throw ShapeError("tensor: slice() needs rank 3");
    if (i < 0 || i >= dim(0)) throw ShapeError("tensor: slice index out of range");
    return {data_.data() + i * dim(1) * dim(2), dim(1), dim(2)};
  }

 private:
  static int64_t checked_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
      if (d < 0) throw ShapeError("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using Tensor = TensorT<double>;

}  // namespace tim4rec
