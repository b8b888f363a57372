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

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strec/tensor.hpp"

namespace strec {

class Graph;

// Handle to a value recorded on a Graph. Cheap to copy; valid for the
// lifetime of the owning Graph.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const;
  Index dim(int i) const { return value().dim(i); }
};

// Reverse-mode tape: a recorded list of operations over dense tensors.
// Parameters are named leaves; backward() fills one gradient per parameter.
// A Graph is confined to a single thread.
class Graph {
 public:
  // Called with the owning graph and the node's own id during backward().
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;

  Var parameter(const std::string& name, const Tensor& init);
  Var constant(Tensor value);

  // Used by the op library: records a node whose backward closure scatters
  // the node's gradient into its inputs.
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  // Runs reverse accumulation from a scalar loss. Gradients are reset first,
  // so repeated calls from the same recorded forward give identical results.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  Tensor& grad_ref(std::uint32_t id) { return nodes_[id].grad; }

  // Gradient of a node (parameters included); valid after backward().
  const Tensor& grad(Var v) const;
  const Tensor& grad(const std::string& parameter_name) const;

  bool has_parameter(const std::string& name) const { return param_ids_.count(name) > 0; }
  const std::vector<std::pair<std::string, std::uint32_t>>& parameters() const { return params_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated only when requires_grad
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::uint32_t>> params_;
  std::unordered_map<std::string, std::uint32_t> param_ids_;
  bool backward_ran_ = false;
};

}  // namespace strec
