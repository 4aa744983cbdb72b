// asem/tensor.h

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASEM_TENSOR_H_
#define ASEM_TENSOR_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace asem {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape &shape);
std::size_t ShapeSize(const Shape &shape);

/// Dense row-major tensor of doubles.  All computation happens in 64 bits;
/// files store 32-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor({}, {value}); }
  /// Rank-1 tensor holding `values`.
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double> &values() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  /// Element (r, c) of a rank-2 tensor.
  double &at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  /// Value of a tensor holding exactly one element.
  double item() const;

  /// Same data viewed under a new shape of equal size.
  Tensor Reshaped(Shape shape) const;

  bool AllFinite() const;
  void Fill(double value);

  bool operator==(const Tensor &other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Parameters and gradients are keyed by name; std::map gives the fixed,
/// sorted iteration order every update and file relies on.
using TensorMap = std::map<std::string, Tensor>;

/// Largest absolute elementwise difference; shapes must agree.
double MaxAbsDiff(const Tensor &a, const Tensor &b);

}  // namespace asem

#endif  // ASEM_TENSOR_H_
