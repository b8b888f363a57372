/*
 * Copyright 2026 The strec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Core>
#include <initializer_list>
#include <string>
#include <vector>

namespace strec {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;

Index shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool shape_eq(const Shape& a, const Shape& b);

// Dense n-dimensional array of doubles in row-major order, backed by an
// Eigen vector. All model math runs in 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from(Shape shape, std::initializer_list<double> values);
  static Tensor from_vector(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  // dim(-1) is the trailing extent.
  Index dim(int i) const;
  Index numel() const { return data_.size(); }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }

  double& operator[](Index i) { return data_[i]; }
  double operator[](Index i) const { return data_[i]; }
  double& at(std::initializer_list<Index> idx);
  double at(std::initializer_list<Index> idx) const;

  // Value of a one-element tensor.
  double value() const;

  // 2-D views over the flat storage. mat2d() folds all leading axes so the
  // trailing axis becomes the column dimension.
  MatMap mat(Index rows, Index cols);
  ConstMatMap mat(Index rows, Index cols) const;
  MatMap mat2d();
  ConstMatMap mat2d() const;

  Tensor reshaped(Shape shape) const;

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_eq(shape_, other.shape_); }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

}  // namespace strec
