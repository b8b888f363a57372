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
#include "strec/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace strec {

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape has non-positive extent " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

bool shape_eq(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape, Eigen::VectorXd data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw std::invalid_argument("tensor shape " + shape_str(shape_) + " does not match data length " +
                                std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(Shape shape) {
  const Index n = shape_numel(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Zero(n));
}

Tensor Tensor::full(Shape shape, double value) {
  const Index n = shape_numel(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Constant(n, value));
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  return from_vector(std::move(shape), std::vector<double>(values));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = values[static_cast<std::size_t>(i)];
  return Tensor(std::move(shape), std::move(v));
}

Index Tensor::dim(int i) const {
  const int r = static_cast<int>(shape_.size());
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw std::out_of_range("tensor axis out of range for shape " + shape_str(shape_));
  return shape_[static_cast<std::size_t>(i)];
}

namespace {

Index flat_index(const Shape& shape, std::initializer_list<Index> idx) {
  if (idx.size() != shape.size()) {
    throw std::invalid_argument("index rank does not match tensor shape " + shape_str(shape));
  }
  Index flat = 0;
  std::size_t k = 0;
  for (Index i : idx) {
    if (i < 0 || i >= shape[k]) throw std::out_of_range("index out of range for shape " + shape_str(shape));
    flat = flat * shape[k] + i;
    ++k;
  }
  return flat;
}

}  // namespace

double& Tensor::at(std::initializer_list<Index> idx) { return data_[flat_index(shape_, idx)]; }

double Tensor::at(std::initializer_list<Index> idx) const { return data_[flat_index(shape_, idx)]; }

double Tensor::value() const {
  if (numel() != 1) {
    throw std::invalid_argument("value() requires a one-element tensor, got shape " + shape_str(shape_));
  }
  return data_[0];
}

MatMap Tensor::mat(Index rows, Index cols) {
  if (rows * cols != numel()) {
    throw std::invalid_argument("cannot view tensor " + shape_str(shape_) + " as " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  return MatMap(data_.data(), rows, cols);
}

ConstMatMap Tensor::mat(Index rows, Index cols) const {
  if (rows * cols != numel()) {
    throw std::invalid_argument("cannot view tensor " + shape_str(shape_) + " as " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  return ConstMatMap(data_.data(), rows, cols);
}

MatMap Tensor::mat2d() {
  const Index cols = rank() == 0 ? 1 : dim(-1);
  return mat(numel() / cols, cols);
}

ConstMatMap Tensor::mat2d() const {
  const Index cols = rank() == 0 ? 1 : dim(-1);
  return mat(numel() / cols, cols);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (Index i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) return false;
  }
  return true;
}

}  // namespace strec
