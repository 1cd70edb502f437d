// Copyright 2026 The capgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAPGAN_TENSOR_TENSOR_HPP_
#define CAPGAN_TENSOR_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace capgan {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);
std::size_t ShapeNumel(const Shape& shape);

// Dense row-major array of doubles. A scalar has shape {1}. Rank-1 tensors are
// treated as a single row wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor({1}, {value}); }
  static Tensor Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view: leading dims fold into rows, last dim is cols.
  std::size_t rows() const { return shape_.empty() ? 0 : numel() / shape_.back(); }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  void Fill(double value);
  bool AllFinite() const;
  // Same data, new shape; numel must match.
  Tensor Reshaped(Shape shape) const;
  // Appends the rows of a matrix with matching column count. An empty
  // tensor adopts the shape of `rows`.
  void AppendRows(const Tensor& rows);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// A learnable tensor with its gradient accumulator. The accumulator is not
// part of the model's logical value, so it stays writable through const
// models during backward.
struct Parameter {
  std::string name;
  Tensor value;
  mutable Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void ZeroGrad() const { grad.Fill(0.0); }
};

// Dense kernels used by both the ops and the inference paths.
namespace kernels {
// c[m x n] += a[m x k] * b[k x n]
void GemmAcc(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x n] += a[m x k] * b^T where b is [n x k]
void GemmNtAcc(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// c[m x n] += a^T * b where a is [k x m], b is [k x n]
void GemmTnAcc(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
}  // namespace kernels

}  // namespace capgan

#endif  // CAPGAN_TENSOR_TENSOR_HPP_
